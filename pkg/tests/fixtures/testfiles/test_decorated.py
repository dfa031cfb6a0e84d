import pytest

from mathx import gcd


@pytest.fixture
def pairs():
    return [(12, 8), (7, 3)]


@pytest.mark.parametrize(
    "a,b,expected",
    [
        (12, 8, 4),
        (7, 3, 1),
    ],
)
def test_gcd(a, b, expected):
    assert gcd(a, b) == expected


@pytest.mark.slow
def test_gcd_pairs(pairs):
    for a, b in pairs:
        assert gcd(a, b) >= 1


async def test_async_gcd():
    assert gcd(4, 2) == 2

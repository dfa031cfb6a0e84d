import pytest

from shapes import Circle, Square


class TestCircle:
    radius = 2

    def test_area(self):
        assert Circle(self.radius).area() == pytest.approx(12.566, rel=1e-3)

    def test_perimeter(self):
        assert Circle(1).perimeter() == pytest.approx(6.283, rel=1e-3)


class TestSquare:
    def test_area(self):
        assert Square(3).area() == 9

    def helper_side(self):
        return 3

    class TestNested:
        def test_nested_area(self):
            assert Square(1).area() == 1

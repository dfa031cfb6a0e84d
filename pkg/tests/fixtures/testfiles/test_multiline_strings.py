import textwrap

from render import render


TEMPLATE = """
def not_a_function():
    pass
"""


def test_render_template():
    out = render(TEMPLATE)
    expected = textwrap.dedent("""\
        def not_a_function():
            pass
    """)
    assert out.strip() == expected.strip()


def test_render_empty():
    assert render("") == ""
# trailing comment

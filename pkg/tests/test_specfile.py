import pytest
from hypothesis import given, settings

from abelca.ring import LaurentPoly, PolyMatrix
from abelca.specfile import (
    SpecSemanticError, SpecSyntaxError, format_poly, format_spec, parse_poly, parse_spec,
    spec_from_matrix,
)

from conftest import fixture_path, spec
from test_ring import matrices, polys

NAMES = ["theta", "theta_u", "theta_k4", "tf4", "rule90", "shift", "group_example"]


def test_parse_poly_forms():
    assert parse_poly("u^-1 + 1 + u", 2) == LaurentPoly({-1: 1, 0: 1, 1: 1}, 2)
    assert parse_poly("3*u^2 - u", 4) == LaurentPoly({2: 3, 1: 3}, 4)
    assert parse_poly("2*u^3 + 3", 2) == LaurentPoly({0: 1}, 2)
    assert parse_poly("0", 2).is_zero()


@pytest.mark.parametrize("text,col", [("u^", 3), ("1 + + u", 5), ("u $ 1", 3), ("(1 + u", 1), ("u u", 3)])
def test_parse_poly_errors_carry_positions(text, col):
    with pytest.raises(SpecSyntaxError) as exc:
        parse_poly(text, 2, line=4)
    assert exc.value.line == 4
    assert exc.value.col == col


@pytest.mark.parametrize("name", NAMES)
def test_fixture_round_trip(name):
    s = spec(name)
    text = format_spec(s)
    again = parse_spec(text)
    assert format_spec(again) == text
    assert again.automaton() == s.automaton()
    assert again.initial() == s.initial()


@given(polys(4))
@settings(max_examples=150, deadline=None)
def test_format_then_parse_poly(p):
    assert parse_poly(format_poly(p), 4) == p


@given(matrices(8, 2))
@settings(max_examples=50, deadline=None)
def test_format_then_parse_spec(T):
    s = spec_from_matrix(T, init=(1, 0))
    back = parse_spec(format_spec(s))
    assert back.automaton() == T
    assert back.initial() == (1, 0)


def test_group_example_file():
    s = spec("group_example")
    assert s.automaton().coefficient(0).tolist() == [[3, 3, 1], [16, 0, 1], [16, 2, 0]]
    assert s.initial() == (1, 0, 0)


def test_mixed_order_group_needs_a_prime():
    text = "group 12 6\nimage 1 : 5 3\nimage 2 : 2 1\ninit 1 1\n"
    with pytest.raises(SpecSemanticError, match="primes"):
        parse_spec(text).automaton()
    s2 = parse_spec(text, prime=2)
    assert s2.automaton().q == 4
    assert s2.initial() == (1, 2)
    s3 = parse_spec(text, prime=3)
    assert s3.automaton().q == 3
    with pytest.raises(SpecSemanticError, match="does not divide"):
        parse_spec(text, prime=5).automaton()


@pytest.mark.parametrize("text,match", [
    ("ring 2 1\ndim 2\nentry 1 2 : 1\ngroup 2\nimage 1 : 1\n", "exactly one"),
    ("group 4\nimage 1 : 1\ndim 1\n", "drop the dim"),
    ("ring 6 1\ndim 1\n", "prime power"),
    ("ring 2 1\ndim 1\nentry 2 1 : 1\n", "out of range"),
    ("ring 2 1\ndim 2\ninit 1\n", "init has"),
    ("group 4 2\nimage 1 : 1 0\n", "missing images"),
    ("group 4 2\nimage 1 : 1 1\nimage 2 : 1 1\n", "divisible"),
    ("field 2 2 : w^2 + 1\ndim 1\nfentry 1 1 : w\n", "reducible"),
    ("ring 2 1\ndim 1\ncolor 1 = 1 2\n", "three values"),
])
def test_semantic_errors(text, match):
    with pytest.raises(SpecSemanticError, match=match):
        parse_spec(text)


def test_syntax_error_positions():
    with pytest.raises(SpecSyntaxError) as exc:
        parse_spec("ring 2 1\ndim 1\nentry 1 1 : u + * 1\n")
    assert (exc.value.line, exc.value.col) == (3, 17)
    with pytest.raises(SpecSyntaxError) as exc:
        parse_spec("group 4\nimage 1 : 1 x\n")
    assert (exc.value.line, exc.value.col) == (2, 13)
    with pytest.raises(SpecSyntaxError) as exc:
        parse_spec("ring 2 1\n  bogus 3\n")
    assert (exc.value.line, exc.value.col) == (2, 3)


def test_comments_and_blank_lines_are_ignored():
    s = parse_spec("# header\n\nring 2 1   # binary\ndim 1\nentry 1 1 : u\n")
    assert s.automaton() == PolyMatrix([[LaurentPoly.mono(1, 1, 2)]], 2)


def test_fixture_paths_exist():
    for n in NAMES:
        assert open(fixture_path(n)).read()

"""Tests for finitely supported vectors, functionals and exact surds."""
from fractions import Fraction

import pytest

from l1workbench.norms.values import Surd, render, sqrt_floor, sqrt_upper, surd_max
from l1workbench.spaces.linspace import (
    Func,
    FuncTag,
    Interval,
    TagKind,
    Vec00,
    canonical_serialize,
    parse_func,
    parse_vector,
    restrict,
    successive,
)
from l1workbench.utils.errors import ParseError, PreconditionError


def test_vector_arithmetic():
    x = parse_vector("1:1/2,3:-1")
    y = Vec00.unit(3)
    assert (x + y).support == (1,)
    assert x.l1 == Fraction(3, 2)
    assert x.sup == 1
    assert x.range == Interval(1, 3)
    assert x.scale(2).coeff(1) == 1
    assert x.restrict(Interval(2, 5)) == Vec00.unit(3, -1)


def test_vector_text_forms_agree():
    x = parse_vector("1:1/2,3:-1")
    assert str(x) == "[(1,1/2),(3,-1/1)]"
    assert parse_vector(str(x)) == x


def test_vector_rejects_bad_input():
    with pytest.raises(ParseError):
        parse_vector("1-2")
    with pytest.raises(ParseError):
        parse_vector("[(1,1/2)")
    with pytest.raises(PreconditionError):
        Vec00(((2, Fraction(1)), (1, Fraction(1))))


def test_successive_blocks():
    assert successive([Vec00.unit(1), Vec00.indicator([2, 4]), Vec00.unit(5)])
    assert not successive([Vec00.indicator([1, 3]), Vec00.unit(2)])


def test_functional_serialization_round_trip():
    f = Func(Vec00.indicator([2, 3], Fraction(1, 4)), FuncTag(TagKind.G1, index=1, weight=4,
                                                               components=((1, (2, 3)),)))
    text = canonical_serialize(f)
    assert text.endswith("|-")
    assert parse_func(text) == f
    assert f(Vec00.indicator([2, 3, 4], 2)) == 1


def test_restriction_keeps_surviving_components():
    tag = FuncTag(TagKind.GSP, components=((1, (1, 2)), (2, (4, 5))))
    f = Func(Vec00.indicator([1, 2, 4, 5], Fraction(1, 4)), tag)
    g = restrict(f, Interval(3, 9))
    assert g.support == (4, 5)
    assert g.tag.index_set == frozenset({2})


def test_surd_arithmetic():
    root2 = Surd.sqrt(2)
    assert root2 * root2 == 2
    assert Surd.sqrt(8) == root2 * 2
    assert Surd.sqrt(Fraction(1, 16)) == Fraction(1, 4)
    assert Surd.sqrt(16).is_rational
    assert Surd.of(1) < root2 < Fraction(3, 2)
    assert (root2 - 1).sign() == 1
    assert surd_max([Surd.of(1), root2, Surd.of(Fraction(7, 5))]) == root2


def test_surd_radicands_with_large_square_factors():
    """2003 lies above the trial-division primes; 1000003 * 1000033 makes the cofactor too large to settle by isqrt."""
    difference = Surd.sqrt(Fraction(2 * 2003 ** 2)) - Surd.sqrt(2) * 2003
    assert difference == 0
    assert difference.sign() == 0
    assert Surd.sqrt(Fraction(2 * 2003 ** 2)).terms == ((2, Fraction(2003)),)

    q = 1000033 * 1000037
    big = Surd.sqrt(q * 1000003 ** 2)
    assert big - Surd.sqrt(q) * 1000003 == 0
    assert big == Surd.sqrt(q) * 1000003
    assert hash(big) == hash(Surd.sqrt(q) * 1000003)
    assert (big - Surd.sqrt(q) * 1000002).sign() == 1


def test_surd_square_and_render():
    value = Surd.sqrt(Fraction(3, 4))
    assert value.square() == Fraction(3, 4)
    data = render(value)
    assert data["square"] == "3/4"
    assert data["decimal"].startswith("0.866")
    with pytest.raises(PreconditionError):
        Surd.sqrt(-1)


def test_sqrt_enclosures():
    assert sqrt_floor(2) < sqrt_upper(2)
    assert sqrt_floor(2) ** 2 <= 2 <= sqrt_upper(2) ** 2
    assert sqrt_floor(Fraction(9, 4)) == sqrt_upper(Fraction(9, 4)) == Fraction(3, 2)

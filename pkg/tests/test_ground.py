"""Tests for the ground set: G1 elements, special sequences and membership replay."""
from fractions import Fraction

import pytest

from l1workbench.normsets.auxiliary import c_element, sup_norm_violations
from l1workbench.normsets.builders import special_leaf
from l1workbench.normsets.ground import (
    SequenceFailure,
    build_special_sequence,
    check_special_sequence,
    disjoint_packing,
    g1_enumerate,
    g1_functional,
    is_g1,
    l2_functional,
    next_admissible_minimum,
    realizable_prefixes,
)
from l1workbench.normsets.rules import RuleSet, parse_rules, verify_membership
from l1workbench.spaces.linspace import Func, FuncTag, Interval, TagKind, Vec00
from l1workbench.utils.errors import ParseError, PreconditionError


def test_g1_enumeration_count(micro):
    """n_1 = 2: three singletons and three pairs, every sign pattern."""
    functionals, truncated = g1_enumerate(1, Interval(1, 3), micro)
    assert len(functionals) == 18
    assert not truncated
    assert all(is_g1(f, micro) for f in functionals)


def test_g1_enumeration_cap(micro):
    functionals, truncated = g1_enumerate(1, Interval(1, 3), micro, cap=10)
    assert len(functionals) == 10
    assert truncated


def test_g1_functional_shape(micro):
    f = g1_functional(2, [4, 5, 6], micro, signs=[1, -1, 1])
    assert f.weight == 64
    assert f.base.coeff(5) == Fraction(-1, 64)
    assert f.tag.index_set == frozenset({2})
    with pytest.raises(PreconditionError):
        g1_functional(1, [1, 2, 3], micro)
    assert not is_g1(Func(Vec00.unit(1, Fraction(1, 3)), f.tag), micro)


def test_special_sequence_build_and_check(micro, registry):
    seq = build_special_sequence([[2, 3], [4, 5]], 1, registry, micro)
    assert [f.index for f in seq] == [1, 2]
    assert check_special_sequence(seq, 1, registry, micro)
    assert realizable_prefixes(1, registry, micro) == [((seq[0],), 2)]


def test_special_sequence_failures(micro, registry):
    check = check_special_sequence([g1_functional(2, [1], micro)], 1, registry, micro)
    assert check.reason == SequenceFailure.START

    seq = [g1_functional(1, [2], micro), g1_functional(3, [4], micro)]
    check = check_special_sequence(seq, 1, registry, micro)
    assert check.reason == SequenceFailure.SIGMA1
    assert check.position == 2

    longer = build_special_sequence([[2], [3], [4]], 2, registry, micro)
    assert check_special_sequence(longer, 2, registry, micro)
    assert check_special_sequence(longer, 1, registry, micro).reason == SequenceFailure.S_XI
    assert check_special_sequence(longer[::-1], 2, registry, micro).reason == SequenceFailure.ORDERING
    assert not check_special_sequence([], 1, registry, micro)


def test_special_sequence_preconditions(micro, registry):
    with pytest.raises(PreconditionError):
        build_special_sequence([[1], [2]], 1, registry, micro)
    with pytest.raises(PreconditionError):
        build_special_sequence([[2]], 1, registry, micro, j1=2)


def test_special_leaf_replays_in_the_ground_set(micro, registry):
    seq = build_special_sequence([[2, 3], [4, 5]], 1, registry, micro)
    g = special_leaf(seq, [1, -1])
    assert g(Vec00.indicator([2, 3, 4, 5], 1)) == Fraction(2, 4) - Fraction(2, 64)
    assert verify_membership(g, RuleSet.ground_set(1), micro, registry)

    forged = Func(g.base.scale(2), g.tag, g.analysis)
    result = verify_membership(forged, RuleSet.ground_set(1), micro, registry)
    assert not result
    assert result.node == "root"


def test_l2_combination_needs_disjoint_indices(micro):
    f = g1_functional(1, [1], micro)
    g = g1_functional(2, [2], micro)
    combined = l2_functional([f, g], [Fraction(3, 5), Fraction(4, 5)])
    assert combined.kind == TagKind.GL2
    assert combined.tag.index_set == frozenset({1, 2})
    with pytest.raises(PreconditionError):
        l2_functional([f, g1_functional(1, [3], micro)], [Fraction(1, 2), Fraction(1, 2)])
    with pytest.raises(PreconditionError):
        l2_functional([f, g], [Fraction(1), Fraction(1, 2)])


def test_sup_norm_bound(micro):
    """c1^2 = 3/2 at micro: coordinate functionals pass, a weight-2 type I with a unit entry fails."""
    assert sup_norm_violations([c_element([1, 2], [1, -1])], micro) == []
    heavy = Func(Vec00.unit(1), FuncTag(TagKind.TYPE_I, index=1, weight=2))
    violations = sup_norm_violations([heavy], micro)
    assert [(t, value) for _, t, value in violations] == [(1, Fraction(1))]


def test_next_admissible_minimum():
    assert next_admissible_minimum((2,), 1, 2, 10) == 3
    assert next_admissible_minimum((2, 3), 1, 3, 10) is None


def test_rule_names():
    assert parse_rules("K").name == "K"
    assert parse_rules("W:3").j0 == 3
    assert parse_rules("G").operations is False
    with pytest.raises(ParseError):
        parse_rules("W:x")
    with pytest.raises(ParseError):
        parse_rules("Z")
    with pytest.raises(PreconditionError):
        RuleSet.w(1)


def test_disjoint_packing_reports_truncation():
    values = {frozenset({1, 2}): Fraction(5), frozenset({1}): Fraction(3), frozenset({2}): Fraction(3)}
    value, keys, truncated = disjoint_packing(values)
    assert value == 6 and not truncated
    assert sorted(sorted(k) for k in keys) == [[1], [2]]

    value, keys, truncated = disjoint_packing(values, budget=1)
    assert truncated
    assert value == 5

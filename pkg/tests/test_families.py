"""Tests for Schreier families, ordinals and finite trees."""
import pytest
from hypothesis import given
from hypothesis import strategies as st

from l1workbench.combinatorics.families import (
    AFamily,
    Compose,
    admissible,
    enumerate_restricted,
    is_maximal,
    member,
    parse_family,
    parse_finset,
    schreier,
)
from l1workbench.combinatorics.ordinal import Ordinal, fundamental_sequence, parse_ordinal
from l1workbench.combinatorics.trees import FinTree, family_to_tree, tree_order, tree_to_family
from l1workbench.report.generator import schreier_mismatches
from l1workbench.spaces.linspace import Vec00
from l1workbench.utils.errors import ParseError, PreconditionError, ResourceCapError

finite_sets = st.sets(st.integers(min_value=1, max_value=24), max_size=9).map(lambda s: tuple(sorted(s)))
orders = st.sampled_from(["0", "1", "2", "3", "w"])


def test_schreier_one_on_four_points():
    """S_1 restricted to {1..4} has eight members, the empty set included."""
    members = enumerate_restricted(schreier(1), 4)
    assert len(members) == 8
    assert members[0] == ()
    assert (2, 3) in members and (3, 4) in members
    assert (1, 2) not in members


def test_schreier_two_maximality():
    """{2,3,6,7,8} splits into two S_1 blocks but still extends by 9."""
    family = schreier(2)
    assert member(family, (2, 3, 6, 7, 8))
    assert not is_maximal(family, (2, 3, 6, 7, 8))
    assert member(family, (2, 3, 6, 7, 8, 9))


def test_maximal_sets_of_schreier_one():
    """A set of S_1 is maximal exactly when its size equals its minimum."""
    family = schreier(1)
    assert is_maximal(family, (1,))
    assert is_maximal(family, (3, 4, 5))
    assert not is_maximal(family, (3, 5))


def test_is_maximal_rejects_non_members():
    with pytest.raises(PreconditionError):
        is_maximal(schreier(1), (1, 2))


def test_schreier_zero_and_a_family():
    assert member(schreier(0), (7,))
    assert not member(schreier(0), (7, 8))
    assert member(AFamily(3), (1, 2, 3))
    assert not member(AFamily(3), (1, 2, 3, 4))


@given(orders, finite_sets)
def test_schreier_families_are_hereditary(order, F):
    family = schreier(parse_ordinal(order))
    if member(family, F):
        for position in range(len(F)):
            assert member(family, F[:position] + F[position + 1:])


@given(orders, finite_sets, st.integers(min_value=0, max_value=5))
def test_schreier_families_are_spreading(order, F, shift):
    """Moving every element right by the same amount keeps membership."""
    family = schreier(parse_ordinal(order))
    if member(family, F):
        assert member(family, tuple(k + shift for k in F))


@pytest.mark.parametrize("xi", [1, 2])
def test_schreier_exhaustive_checks(xi):
    """Heredity, spreading, S(xi+1) = S(1)[S(xi)] and maximality agree with brute force on {1..9}."""
    counts = schreier_mismatches(xi, 9)
    assert counts == {"hereditary": 0, "spreading": 0, "successor": 0, "maximal": 0}


def test_composition_matches_successor():
    composed = Compose(schreier(1), schreier(1))
    for F in [(2, 3, 6, 7, 8), (2, 3, 4, 5, 6, 7), (3, 4, 5, 6, 7, 8, 9, 10, 11)]:
        assert member(composed, F) == member(schreier(2), F)


def test_limit_order_uses_the_minimum():
    """S(w) holds F iff F lies in S(n) for some n <= min F."""
    omega = parse_ordinal("w")
    assert fundamental_sequence(omega, 3) == Ordinal.of(3)
    assert member(schreier(omega), (2, 3, 4, 5, 6, 7))
    assert not member(schreier(omega), (1, 2))


def test_admissible_block_sequences():
    blocks = [Vec00.indicator([2, 3]), Vec00.unit(5)]
    assert admissible(schreier(1), blocks)
    assert not admissible(schreier(1), [Vec00.unit(1), Vec00.unit(2)])
    assert not admissible(schreier(1), [Vec00.indicator([2, 5]), Vec00.unit(4)])


def test_parse_family_is_stable():
    for text in ["S(1)", "A(5)", "S(2)[S(1)]", "S(w+1)|N=20", "(S(1)|N=9)[A(2)]"]:
        spec = parse_family(text)
        assert str(parse_family(str(spec))) == str(spec)


def test_parse_errors():
    with pytest.raises(ParseError):
        parse_family("S(1")
    with pytest.raises(ParseError):
        parse_family("T(1)")
    with pytest.raises(ParseError):
        parse_finset("1,x")
    assert parse_finset("{5,3,4}") == (3, 4, 5)
    assert parse_finset("") == ()


def test_enumeration_cap():
    with pytest.raises(ResourceCapError):
        enumerate_restricted(schreier(1), 40, cap=30)


def test_restricted_family_maximality():
    """{3,4} only extends by 5, which the cap at 4 forbids."""
    spec = parse_family("S(1)|N=4")
    assert is_maximal(spec, (3, 4))
    assert not is_maximal(schreier(1), (3, 4))
    assert not is_maximal(spec, (3,))


def test_tree_order_counts_longest_chain():
    members = enumerate_restricted(schreier(1), 6)
    assert tree_order(family_to_tree(members)) == 3
    assert tree_order(FinTree(frozenset())) == 0


def test_tree_round_trip():
    tree = FinTree.from_nodes([(1,), (1, 2), (1, 2, 5), (3,)])
    family = tree_to_family(tree)
    assert () in family and (1, 5) in family and (2, 5) in family
    assert tree.maximal_nodes() == {(1, 2, 5), (3,)}
    with pytest.raises(PreconditionError):
        FinTree.from_nodes([(1, 2)])

"""Property tests for the norm oracles, checked against exhaustive evaluation and grid searches."""
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from l1workbench.analysis.exact_pairs import build_attracting_sequence
from l1workbench.norms.dual import dual_norm, grid_dual_lower
from l1workbench.norms.enumeration import saturation_by_enumeration
from l1workbench.norms.extension import depth_profile, norm_extension, oracle
from l1workbench.norms.ground_norm import norm_ground
from l1workbench.norms.l2sum import l2sum_result
from l1workbench.normsets.ground import g1_functional, l2_functional
from l1workbench.normsets.rules import RuleSet, negate, parse_rules, restrict_certified, verify_membership
from l1workbench.spaces.linspace import Func, FuncTag, Interval, TagKind, Vec00, canonical_serialize, parse_func
from l1workbench.utils.errors import PreconditionError

coefficients = st.fractions(min_value=-2, max_value=2, max_denominator=4)
vectors = st.dictionaries(st.integers(min_value=1, max_value=12), coefficients, min_size=1, max_size=5).map(
    Vec00.from_mapping)
nonzero_vectors = vectors.filter(lambda x: not x.is_zero)
rule_names = st.sampled_from(["K", "HI", "W:2", "D"])


@given(x=vectors, name=rule_names, depth=st.integers(min_value=0, max_value=3))
def test_table_search_matches_exhaustive_evaluation(micro, x, name, depth):
    rules = parse_rules(name)
    assert norm_extension(x, rules, depth, micro).lower == saturation_by_enumeration(x, rules, depth, micro)


@pytest.mark.parametrize("signs", [(1, 1), (1, -1), (-1, 1)])
@pytest.mark.parametrize("depth", [2, 3])
def test_table_search_matches_exhaustive_evaluation_on_stored_chains(micro, registry, signs, depth):
    seq = build_attracting_sequence(1, 1, micro, registry)
    points = [f.base.minsupp for f in seq.fs]
    x = Vec00.from_mapping({points[0]: signs[0], points[1]: signs[1], points[1] + 2: Fraction(1, 2)})
    rules = RuleSet.k_xi()
    expected = saturation_by_enumeration(x, rules, depth, micro, registry)
    assert norm_extension(x, rules, depth, micro, registry).lower == expected


def test_exhaustive_evaluation_rejects_large_supports(micro):
    with pytest.raises(PreconditionError):
        saturation_by_enumeration(Vec00.indicator(range(1, 8)), RuleSet.k_xi(), 1, micro)
    with pytest.raises(PreconditionError):
        saturation_by_enumeration(Vec00.unit(1), RuleSet.k_xi(), 4, micro)


@given(x=nonzero_vectors, y=nonzero_vectors)
def test_triangle_inequality(micro, x, y):
    ground = norm_ground(x + y, micro)
    assert ground.lower <= norm_ground(x, micro).upper + norm_ground(y, micro).upper
    rules = RuleSet.k_xi()
    total = norm_extension(x + y, rules, 2, micro)
    assert total.lower <= norm_extension(x, rules, 2, micro).upper + norm_extension(y, rules, 2, micro).upper


@given(x=nonzero_vectors, c=coefficients.filter(lambda c: c != 0))
def test_homogeneity(micro, x, c):
    assert norm_ground(x.scale(c), micro).lower == norm_ground(x, micro).lower * abs(c)
    assert l2sum_result(x.scale(c)).lower == l2sum_result(x).lower * abs(c)
    rules = RuleSet.k_xi()
    scaled, plain = norm_extension(x.scale(c), rules, 2, micro), norm_extension(x, rules, 2, micro)
    assert scaled.lower <= plain.upper * abs(c)
    assert plain.lower * abs(c) <= scaled.upper


@given(x=nonzero_vectors, name=rule_names)
def test_lower_bounds_grow_with_depth(micro, x, name):
    values = [value for _, value in depth_profile(x, parse_rules(name), [0, 1, 2, 3], micro)]
    assert values == sorted(values)


@given(x=nonzero_vectors)
def test_extension_dominates_the_ground_norm(micro, x):
    ground = norm_ground(x, micro)
    extension = norm_extension(x, RuleSet.k_xi(), 2, micro)
    assert ground.lower <= extension.upper
    assert extension.lower >= norm_extension(x, RuleSet.k_xi(), 0, micro).lower
    assert extension.lower >= x.sup


@given(x=nonzero_vectors, name=rule_names)
def test_witness_attains_the_lower_bound(micro, x, name):
    rules = parse_rules(name)
    result = norm_extension(x, rules, 2, micro)
    assert result.witness_value(x) == result.lower
    assert verify_membership(result.witness, rules, micro)


@given(x=st.dictionaries(st.integers(min_value=1, max_value=12), coefficients, min_size=3, max_size=5).map(
    Vec00.from_mapping).filter(lambda x: len(x) >= 3))
def test_gl2_value_matches_a_search_over_the_unit_circle(micro, x):
    """With three to five coordinates the G1 indices 1 and 2 are the only index sets."""
    result = norm_ground(x, micro)
    ranked = sorted(x, key=lambda e: (-abs(e[1]), e[0]))
    parts = []
    for j, count in ((1, 2), (2, len(ranked))):
        chosen = sorted(ranked[:count])
        parts.append(g1_functional(j, [i for i, _ in chosen], micro, [1 if v > 0 else -1 for _, v in chosen]))
    best = Fraction(0)
    for k in range(201):
        t = Fraction(k, 200)
        a, b = (1 - t * t) / (1 + t * t), 2 * t / (1 + t * t)
        best = max(best, l2_functional(parts, [a, b])(x))
    assert best <= result.layers["Gl2"]
    assert result.layers["Gl2"] <= best * Fraction(1001, 1000)


@given(x=nonzero_vectors, name=rule_names, bounds=st.tuples(st.integers(1, 12), st.integers(0, 6)))
def test_membership_is_symmetric_and_closed_under_restriction(micro, x, name, bounds):
    rules = parse_rules(name)
    witness = norm_extension(x, rules, 2, micro).witness
    E = Interval(bounds[0], bounds[0] + bounds[1])
    assert verify_membership(negate(witness), rules, micro)
    restricted = restrict_certified(witness, E)
    if not restricted.is_zero:
        assert verify_membership(restricted, rules, micro)


@given(x=nonzero_vectors, name=rule_names)
def test_witness_text_round_trip(micro, x, name):
    witness = norm_extension(x, parse_rules(name), 2, micro).witness
    assert parse_func(canonical_serialize(witness)) == witness


@pytest.mark.parametrize("N", [2, 3, 4])
def test_dual_norm_agrees_with_a_grid_search(N):
    """f = e_1* + e_2*/2 in the l2-sum space has dual norm sqrt(5)/2, attained at (1, 1/2, 0, ...)."""
    f = Func(Vec00.from_mapping({1: 1, 2: Fraction(1, 2)}), FuncTag(TagKind.TYPE_III))
    grid, point = grid_dual_lower(f, N, l2sum_result)
    assert point == Vec00.from_mapping({1: 1, 2: Fraction(1, 2)})
    result = dual_norm(f, N, l2sum_result)
    assert grid <= result.upper
    assert abs(result.lower - grid) < Fraction(1, 1000)


def test_dual_norm_of_a_coordinate_in_the_extension(micro):
    f = Func.coordinate(1)
    evaluate = oracle(RuleSet.k_xi(), 1, micro)
    grid, _ = grid_dual_lower(f, 2, evaluate)
    assert grid == 1
    result = dual_norm(f, 2, evaluate)
    assert result.lower <= 1 <= result.upper + Fraction(1, 1000)
    assert grid <= result.upper

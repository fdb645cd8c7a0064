"""Tests for RIS checks, tail indices, l1 trees, spreading brackets and attractor estimates."""
from fractions import Fraction

import numpy as np
import pytest

from l1workbench.analysis.exact_pairs import attractor_estimates, build_attracting_sequence
from l1workbench.analysis.ris import check_growth, check_unit_ball, ris_check
from l1workbench.analysis.separated import hit_counts, range_size, tail_action_bound, tail_index
from l1workbench.analysis.spreading import build_l1_tree, set_bracket, spreading_constant
from l1workbench.norms.extension import oracle
from l1workbench.norms.ground_norm import norm_ground
from l1workbench.norms.l2sum import l2sum_result
from l1workbench.normsets.ground import g1_functional
from l1workbench.normsets.rules import RuleSet
from l1workbench.spaces.linspace import Func, Vec00
from l1workbench.utils.errors import PreconditionError


def test_tail_index_of_a_unit_vector(paper):
    assert tail_index(Vec00.unit(1), Fraction(1), paper) == 0


def test_tail_index_grows_as_eps_shrinks(micro):
    """At micro the tail from j = 1 is just above 1/16, so eps = 1/4 needs j0 = 1."""
    assert tail_index(Vec00.unit(1), Fraction(1, 2), micro) == 0
    assert tail_index(Vec00.unit(1), Fraction(1, 4), micro) == 1
    with pytest.raises(PreconditionError):
        tail_index(Vec00(), Fraction(1), micro)


def test_tail_action_bound_is_below_the_l1_norm(micro):
    bound = tail_action_bound(Vec00.indicator([1, 2]), 1, micro)
    assert 0 < bound < 2


def test_growth_condition(micro):
    xs = [Vec00.unit(1), Vec00.unit(2)]
    assert check_growth(xs, Fraction(1, 2), [2, 3], micro).holds
    assert not check_growth(xs, Fraction(1, 2), [1, 2], micro).holds


def test_unit_ball_condition(micro):
    oracle = lambda x: norm_ground(x, micro)
    assert check_unit_ball([Vec00.unit(1), Vec00.unit(2)], oracle).holds
    assert not check_unit_ball([Vec00.unit(1, 2)], oracle).holds


def test_ris_rejects_malformed_input(micro):
    oracle = lambda x: norm_ground(x, micro)
    witness = ris_check([Vec00.unit(1), Vec00.unit(2)], Fraction(1), Fraction(1, 2), [3, 2], micro, oracle)
    assert witness.failed == "b"
    witness = ris_check([Vec00.unit(2), Vec00.unit(1)], Fraction(1), Fraction(1, 2), [2, 3], micro, oracle)
    assert witness.failed == "a"
    assert not witness.holds


def test_hit_counts():
    ys = [Vec00.unit(1), Vec00.unit(2), Vec00.indicator([3, 4], Fraction(1, 2))]
    universe = [Func.coordinate(1), Func(Vec00.indicator([1, 2, 3]), Func.coordinate(1).tag)]
    counts, largest = hit_counts(ys, universe, Fraction(1, 2))
    assert counts == [1, 3]
    assert largest == 3
    assert range_size(Vec00.indicator([3, 7])) == 5


def test_primal_l1_tree(micro, registry):
    """Every S_1 set inside {1..6} carries a special sequence witnessing the l1 lower bound 1."""
    tree = build_l1_tree(range(1, 7), 1, "l1", registry, micro)
    assert tree.order == 3
    assert len(tree.nodes) == 20
    assert all(node.lower == 1 for node in tree.nodes)
    for node in tree.nodes:
        assert all(f(x) == 1 for f, x in zip(node.functionals, node.vectors))


def test_l1_tree_rejects_bad_input(micro, registry):
    with pytest.raises(PreconditionError):
        build_l1_tree([3, 2], 1, "l1", registry, micro)
    with pytest.raises(PreconditionError):
        build_l1_tree([1, 2], 1, "tree", registry, micro)


def test_set_bracket_inside_one_l1_block():
    """Coordinates 16..18 lie in one l1 block, where every combination is isometric to l1."""
    vectors = [Vec00.unit(16), Vec00.unit(17), Vec00.unit(18)]
    bracket = set_bracket(vectors, l2sum_result, np.random.default_rng(0), restarts=4, steps=4)
    assert bracket.upper == 1
    assert bracket.lower <= 1


def test_spreading_constant_across_blocks():
    """Pairs from distinct l1 blocks span l2^2, so the constant sits near sqrt(2)."""
    xs = [Vec00.unit(i) for i in (1, 2, 4, 7)]
    result = spreading_constant(xs, 1, 2, l2sum_result, budget=20, seed=0)
    low, high = result.constant_bounds()
    assert result.brackets
    assert low >= 1
    assert high is None or high >= low


def test_phi_plus_psi_is_the_odd_operation_over_the_sequence(micro, registry):
    seq = build_attracting_sequence(1, 1, micro, registry)
    estimates = attractor_estimates(seq, oracle(RuleSet.k_xi(), 2, micro, registry), micro, registry)
    m = micro.m(1)
    phi = sum((f.base for f in seq.fs[0::2]), Vec00()).scale(Fraction(1, m * m))
    psi = sum((f.base for f in seq.fs[1::2]), Vec00()).scale(Fraction(1, m * m))
    assert estimates.phi_plus_psi.base == (phi + psi).scale(m)
    assert estimates.phi_plus_psi.tag.index == 1
    assert estimates.sum_bound_member

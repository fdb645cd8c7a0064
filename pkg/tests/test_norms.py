"""Tests for the norm oracles: ground norm, extensions, the l2-sum space, dual and quotient norms."""
from fractions import Fraction

import pytest

from l1workbench.analysis.exact_pairs import ATTRACTOR_ODD, build_attracting_sequence
from l1workbench.norms.dual import dual_norm, quotient_norm
from l1workbench.norms.extension import norm_extension, odd_chains, type_one_bounds
from l1workbench.norms.ground_norm import NormResult, Provenance, norm_ground
from l1workbench.norms.l2sum import block_of, block_range, l2sum_block_vector, l2sum_result, norm_l2sum
from l1workbench.norms.values import Surd
from l1workbench.normsets.rules import RuleSet, negate, operation, verify_membership
from l1workbench.spaces.coding import SIGMA, CodingRegistry
from l1workbench.spaces.linspace import Func, Vec00
from l1workbench.utils.errors import PreconditionError, ResourceCapError


def test_unit_vector_has_ground_norm_one(micro):
    result = norm_ground(Vec00.unit(1), micro)
    assert result.lower == 1 and result.upper == 1
    assert result.exact
    assert result.witness_value(Vec00.unit(1)) == 1


def test_flat_average_is_dominated_by_the_sup_norm(micro):
    """On (e_1 + e_2)/2 every G1 element gives at most 1/4, far below the sup norm 1/2."""
    x = Vec00.indicator([1, 2], Fraction(1, 2))
    result = norm_ground(x, micro)
    assert result.lower == Fraction(1, 2)
    assert result.layers["G1"] == Fraction(1, 4)


def test_zero_vector(micro):
    result = norm_ground(Vec00(), micro)
    assert result.lower == 0 and result.exact
    assert result.witness is None


def test_l2sum_blocks():
    assert [block_of(i) for i in (1, 2, 3, 4, 16, 21, 22)] == [1, 2, 2, 3, 6, 6, 7]
    assert block_range(6) == (16, 21)
    assert l2sum_block_vector(3) == Vec00.indicator([4, 5, 6])
    with pytest.raises(PreconditionError):
        block_of(0)


def test_l2sum_norm_values():
    assert norm_l2sum(Vec00.unit(1) + Vec00.unit(2)) == 2
    assert l2sum_result(Vec00.unit(2) + Vec00.unit(3)).lower == 2
    result = l2sum_result(Vec00.unit(1) + Vec00.unit(2))
    assert result.lower == Surd.sqrt(2)
    assert result.exact
    assert result.witness_value(Vec00.unit(1) + Vec00.unit(2)) == Surd.sqrt(2)


def test_depth_cap_returns_partial_result(micro):
    with pytest.raises(ResourceCapError) as excinfo:
        norm_extension(Vec00.unit(1), RuleSet.ground_set(1), 2, micro, depth_cap=1)
    partial = excinfo.value.partial
    assert isinstance(partial, NormResult)
    assert partial.lower == 1


def test_extension_norm_of_a_unit_vector(micro):
    result = norm_extension(Vec00.unit(1), RuleSet.k_xi(1), 1, micro)
    assert result.lower == 1
    assert result.upper >= 1
    assert result.depth == 1


def test_negative_depth_is_rejected(micro):
    with pytest.raises(PreconditionError):
        norm_extension(Vec00.unit(1), RuleSet.k_xi(1), -1, micro)


def test_result_json(micro):
    data = norm_ground(Vec00.unit(1), micro).to_json()
    assert data["provenance"] == Provenance.EXHAUSTIVE.value
    assert data["lower"]["exact"] == "1"


def test_dual_norm_brackets_the_coordinate_functional():
    result = dual_norm(Func.coordinate(1), 3, l2sum_result)
    assert 0 < result.lower <= 1 <= result.upper
    with pytest.raises(PreconditionError):
        dual_norm(Func.coordinate(5), 3, l2sum_result)


def test_quotient_kills_l_and_keeps_the_rest():
    """3 = pair(1, 2) lies in L; 1 does not."""
    killed = quotient_norm(Vec00.unit(3), 4, l2sum_result)
    assert killed.upper == 0
    kept = quotient_norm(Vec00.unit(1), 4, l2sum_result)
    assert kept.lower == 1
    assert kept.upper == 1


def test_truncated_packing_is_never_reported_exact(mini):
    """Eight equal coordinates: the G1 indices 1 and 2 pack to sqrt(1 + 1/64), which budget 1 cannot find."""
    x = Vec00.indicator(range(1, 9))
    full = norm_ground(x, mini)
    capped = norm_ground(x, mini, packing_budget=1)
    assert capped.provenance == Provenance.SEARCH_CAP
    assert capped.lower == 1
    assert capped.lower < full.lower <= capped.upper
    assert full.provenance != Provenance.SEARCH_CAP


def _chain_minima(seq):
    return Vec00.indicator([f.base.minsupp for f in seq.fs])


def test_odd_operation_completes_a_stored_chain(micro, registry):
    """f_1 = e_1*/m_6 and f_2 = e_lambda*: phi(e_1 + e_lambda) = (1/64 + 1)/2."""
    seq = build_attracting_sequence(1, 1, micro, registry)
    x = _chain_minima(seq)
    phi = operation(1, list(seq.fs), micro, odd=ATTRACTOR_ODD)
    assert phi(x) == Fraction(65, 128)
    bounds = type_one_bounds(x, RuleSet.k_xi(), micro, registry, depth=2)
    assert bounds[1][0] == phi(x)
    result = norm_extension(x, RuleSet.k_xi(), 2, micro, registry)
    assert result.lower >= phi(x)
    assert verify_membership(result.witness, RuleSet.k_xi(), micro, registry)


def test_odd_operation_on_a_longer_attracting_sequence(mini, registry):
    seq = build_attracting_sequence(1, 1, mini, registry)
    assert len(seq.fs) == 4
    x = _chain_minima(seq)
    phi = operation(1, list(seq.fs), mini, odd=ATTRACTOR_ODD)
    assert phi(x) > 1
    bounds = type_one_bounds(x, RuleSet.k_xi(), mini, registry, depth=2)
    assert bounds[1][0] == phi(x)
    result = norm_extension(x, RuleSet.k_xi(), 2, mini, registry)
    assert result.lower >= phi(x)
    assert verify_membership(result.witness, RuleSet.k_xi(), mini, registry)


def test_negated_odd_operation_is_a_member(micro, registry):
    seq = build_attracting_sequence(1, 1, micro, registry)
    phi = operation(1, list(seq.fs), micro, odd=ATTRACTOR_ODD)
    assert verify_membership(phi, RuleSet.k_xi(), micro, registry)
    assert verify_membership(negate(phi), RuleSet.k_xi(), micro, registry)


def test_chains_without_analyses_are_skipped(micro, registry, tmp_path):
    """A registry read back from disk has keys only."""
    seq = build_attracting_sequence(1, 1, micro, registry)
    registry.save(tmp_path / "sigma1.tsv", tmp_path / "sigma.tsv")
    reloaded = CodingRegistry.load(tmp_path / "sigma1.tsv", tmp_path / "sigma.tsv")
    assert reloaded.items(SIGMA)
    assert odd_chains(1, RuleSet.k_xi(), micro, registry)
    assert odd_chains(1, RuleSet.k_xi(), micro, reloaded) == []
    x = _chain_minima(seq)
    assert type_one_bounds(x, RuleSet.k_xi(), micro, reloaded, depth=2)[1][0] < Fraction(65, 128)

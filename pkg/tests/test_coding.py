"""Tests for the coding registry and the pairing of N x N."""
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from l1workbench.normsets.ground import g1_functional
from l1workbench.spaces.coding import (
    CodingRegistry,
    in_m1,
    l_member,
    lambda_elements,
    pair,
    parse_prefix_key,
    prefix_key,
    unpair,
)
from l1workbench.spaces.linspace import Func, FuncTag, TagKind, Vec00
from l1workbench.utils.errors import ParseError, PreconditionError, RegistryFrozenError


@given(st.integers(min_value=1, max_value=40), st.integers(min_value=1, max_value=10 ** 6))
def test_pairing_is_a_bijection(i, k):
    assert unpair(pair(i, k)) == (i, k)


def test_pairing_values():
    assert [pair(1, 1), pair(2, 1), pair(1, 2), pair(3, 1)] == [1, 2, 3, 4]
    assert l_member(3) and not l_member(1)
    elements = lambda_elements(2)
    assert [next(elements) for _ in range(3)] == [2, 6, 10]
    assert in_m1(1) and in_m1(3) and not in_m1(2)


def test_sigma_growth_allocation(micro, registry):
    """maxsupp 10 and least coefficient 1/4 need m_{2v} > 1600, first met at v = 6."""
    prefix = [Func(Vec00.unit(10, Fraction(1, 4)), FuncTag(TagKind.TYPE_III))]
    assert registry.sigma_assign(prefix, micro) == 6
    assert registry.sigma_lookup(prefix) == 6
    assert registry.check_invariants(micro) == []


def test_sigma1_chain_is_increasing(micro, registry):
    f1 = g1_functional(1, [1, 2], micro)
    first = registry.sigma1_assign([f1])
    f2 = g1_functional(first, [3], micro)
    second = registry.sigma1_assign([f1, f2])
    assert (first, second) == (2, 4)
    assert registry.sigma1_assign([f1]) == 2
    assert len(registry.log) == 2
    assert registry.check_invariants() == []


def test_sigma1_rejects_bad_prefixes(micro, registry):
    with pytest.raises(PreconditionError):
        registry.sigma1_assign([])
    with pytest.raises(PreconditionError):
        registry.sigma1_assign([Func.coordinate(1)])
    f = g1_functional(1, [3], micro)
    g = g1_functional(3, [2], micro)
    with pytest.raises(PreconditionError):
        registry.sigma1_assign([f, g])


def test_frozen_registry_only_answers_lookups(micro, registry):
    f = g1_functional(1, [1], micro)
    registry.sigma1_assign([f])
    frozen = registry.snapshot()
    assert frozen.sigma1_lookup([f]) == 2
    with pytest.raises(RegistryFrozenError):
        frozen.sigma1_assign([g1_functional(1, [2], micro)])


def test_scratch_copies_do_not_leak(micro, registry):
    scratch = registry.scratch()
    scratch.sigma1_assign([g1_functional(1, [1], micro)])
    assert len(scratch) == 1
    assert len(registry) == 0


def test_save_and_load(tmp_path, micro, registry):
    f = g1_functional(1, [1, 2], micro)
    registry.sigma1_assign([f])
    registry.sigma_assign([Func(Vec00.unit(10, Fraction(1, 4)), FuncTag(TagKind.TYPE_III))], micro)
    sigma1, sigma = tmp_path / "registry" / "sigma1.tsv", tmp_path / "registry" / "sigma.tsv"
    registry.save(sigma1, sigma)

    loaded = CodingRegistry.load(sigma1, sigma)
    assert loaded.frozen
    assert loaded.sigma1_lookup([f]) == 2
    assert loaded.dump_canonical() == registry.dump_canonical()


def test_load_detects_tampering(tmp_path, micro, registry):
    registry.sigma1_assign([g1_functional(1, [1], micro)])
    sigma1, sigma = tmp_path / "sigma1.tsv", tmp_path / "sigma.tsv"
    registry.save(sigma1, sigma)
    sigma1.write_text(sigma1.read_text().replace("[(1,1/4)]", "[(2,1/4)]"))
    with pytest.raises(ParseError):
        CodingRegistry.load(sigma1, sigma)


def test_prefix_keys_ignore_analysis(micro):
    f = g1_functional(1, [1, 2], micro, signs=[1, -1])
    key = prefix_key([f])
    assert parse_prefix_key(key) == (f,)

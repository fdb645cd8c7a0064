"""Tests for parameter profiles and the arithmetic of the paper profile."""
from fractions import Fraction

import pytest

from l1workbench.spaces.profiles import (
    MINI_UNMET,
    UNMET_GROWTH,
    PaperProfile,
    make_profile,
    paper_growth_condition,
)
from l1workbench.utils.errors import PreconditionError, ResourceCapError


def test_paper_exponents():
    assert PaperProfile.log2_m(2) == 25
    assert PaperProfile.s(1) == 75
    assert PaperProfile.log2_n(1) == 6
    assert PaperProfile.log2_n(2) == 525


def test_paper_profile_materializes_small_values(paper):
    assert paper.m(1) == 32
    assert paper.m(2) == 2 ** 25
    assert paper.n(1) == 64


def test_paper_profile_refuses_huge_values(paper):
    with pytest.raises(ResourceCapError):
        paper.n(4)
    assert paper.n_at_least(4, 10 ** 12)


def test_paper_growth_condition():
    """260 m_{2j}^4 <= n_{2j-1} fails at j = 1 and holds from j = 2 on."""
    assert not paper_growth_condition(1)
    assert paper_growth_condition(2)
    assert paper_growth_condition(3)


def test_micro_profile_constants(micro):
    assert [micro.m(j) for j in range(1, 5)] == [2, 4, 8, 16]
    assert [micro.n(j) for j in range(1, 5)] == [2, 4, 8, 16]
    assert micro.c0_bounds() == (Fraction(1, 3), Fraction(1, 3))
    assert micro.c1_square_bounds() == (Fraction(3, 2), Fraction(3, 2))
    assert micro.c1_upper() >= Fraction(122, 100)


def test_mini_profile_declares_its_gaps(mini):
    assert mini.n(1) == 4 and mini.m(7) == 128
    assert mini.unmet == MINI_UNMET
    assert mini.declares_unmet(UNMET_GROWTH)
    assert not PaperProfile().declares_unmet(UNMET_GROWTH)


def test_first_n_at_least(mini):
    assert mini.first_n_at_least(16) == 3
    assert mini.first_n_at_least(16, start=1, step=2) == 3
    assert mini.first_n_at_least(17, start=1, step=2) == 5


def test_paper_power_sum_encloses(paper):
    low, high = paper.c0_bounds()
    assert Fraction(1, 1024) < low <= high < Fraction(1, 1000)


def test_invalid_profiles():
    with pytest.raises(PreconditionError):
        make_profile("mini", [2, 2, 4], [4, 8, 16])
    with pytest.raises(PreconditionError):
        make_profile("mini", [2, 4], [3, 6])
    with pytest.raises(PreconditionError):
        make_profile("huge")


def test_profile_json(micro):
    data = micro.to_json(upto=3)
    assert data["m"] == ["2", "4", "8"]
    assert data["name"] == "micro"

"""
Spaces a game can be played in.

A GameSpace bundles a norm oracle with the two certificates the referee can
use for the lower l1 estimate: a membership test for single functionals
supplied by V, and either a test that signed sums of V's functionals norm the
space or a closed-form lower bound on the l1 constant of a block sequence.
"""
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Sequence

from l1workbench.combinatorics.ordinal import Ordinal
from l1workbench.norms.extension import oracle as extension_oracle
from l1workbench.norms.ground_norm import NormResult, norm_ground
from l1workbench.norms.l2sum import block_of, block_range, l2sum_result
from l1workbench.norms.values import Surd
from l1workbench.normsets.ground import check_special_sequence, is_g1
from l1workbench.normsets.rules import RuleSet
from l1workbench.spaces.coding import CodingRegistry
from l1workbench.spaces.linspace import Func, Vec00
from l1workbench.spaces.profiles import ParameterProfile
from l1workbench.utils.errors import PreconditionError

logger = logging.getLogger(__name__)

SPACE_NAMES = ("l2sum", "ground", "k")


@dataclass
class GameSpace:
    """
    Attributes:
        name: Short name used in transcripts
        oracle: Certified norm brackets
        norming: True when a single functional is known to lie in the norming set
        certify: True when every signed sum of the functionals lies in the norming set
        l1_lower: Certified lower bound on the l1 constant of a normalized block sequence
        cutoff: Tail cutoff that S uses after V's last support
    """

    name: str
    oracle: Callable[[Vec00], NormResult]
    norming: Optional[Callable[[Func], bool]] = None
    certify: Optional[Callable[[Sequence[Func]], bool]] = None
    l1_lower: Optional[Callable[[Sequence[Vec00]], Surd]] = None
    cutoff: Callable[[int], int] = lambda last: last


def _blocks_touched(vectors: Sequence[Vec00]) -> int:
    return len({block_of(i) for x in vectors for i in x.support})


def l2sum_space() -> GameSpace:
    """
    (sum l1^n)_{l2}: Cauchy-Schwarz over the B blocks met by the supports gives
    ||sum a_i x_i|| >= (1/sqrt B) sum |a_i| for normalized x_i.
    """
    return GameSpace(
        name="l2sum",
        oracle=l2sum_result,
        l1_lower=lambda vectors: Surd.sqrt(Fraction(1, max(1, _blocks_touched(vectors)))),
        cutoff=lambda last: block_range(block_of(last))[1] if last > 0 else 0,
    )


def ground_space(profile: ParameterProfile, registry: CodingRegistry, xi=1) -> GameSpace:
    """X_G for the ground set of order xi; special sequences certify the l1 lower estimate."""
    xi = Ordinal.of(xi)
    return GameSpace(
        name="ground",
        oracle=lambda x: norm_ground(x, profile, registry, xi),
        norming=lambda f: is_g1(f, profile),
        certify=lambda fs: bool(check_special_sequence(fs, xi, registry, profile)),
    )


def extension_space(profile: ParameterProfile, registry: CodingRegistry, xi=1, depth: int = 2) -> GameSpace:
    """X_K with K = K_xi, brackets from the extension oracle."""
    return GameSpace(name="k", oracle=extension_oracle(RuleSet.k_xi(xi), depth, profile, registry))


def make_space(name: str, profile: ParameterProfile, registry: CodingRegistry, xi=1, depth: int = 2) -> GameSpace:
    if name == "l2sum":
        return l2sum_space()
    if name == "ground":
        return ground_space(profile, registry, xi)
    if name == "k":
        return extension_space(profile, registry, xi, depth)
    raise PreconditionError(f"Unknown game space '{name}', expected one of {', '.join(SPACE_NAMES)}")

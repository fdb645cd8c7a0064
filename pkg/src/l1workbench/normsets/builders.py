"""
Certified constructors.

Every functional returned here carries the tree analysis that
verify_membership replays, so producers never have to assemble
AnalysisNode objects by hand.
"""
import logging
import random
from fractions import Fraction
from typing import List, Optional, Sequence

from l1workbench.normsets.ground import (
    g1_functional,
    gsp_witness,
    l2_functional,
    special_functional,
)
from l1workbench.normsets.rules import convex_combination, l2_combination, leaf, operation
from l1workbench.spaces.linspace import Func, GroundWitness, Interval, TagKind
from l1workbench.spaces.profiles import ParameterProfile
from l1workbench.utils.errors import PreconditionError

logger = logging.getLogger(__name__)


def coordinate_leaf(i: int, sign: int = 1) -> Func:
    return leaf(Func.coordinate(i, sign))


def g1_leaf(j: int, support: Sequence[int], profile: ParameterProfile,
            signs: Optional[Sequence[int]] = None) -> Func:
    return leaf(g1_functional(j, support, profile, signs), GroundWitness(TagKind.G1))


def special_leaf(seq: Sequence[Func], signs: Optional[Sequence[int]] = None,
                 window: Optional[Interval] = None) -> Func:
    """A Gsp element with its special-sequence witness."""
    signs = tuple(signs) if signs is not None else (1,) * len(seq)
    return leaf(special_functional(seq, signs, window), gsp_witness(seq, signs, window))


def _part_witness(phi: Func) -> GroundWitness:
    if phi.kind == TagKind.G1:
        return GroundWitness(TagKind.G1)
    if phi.analysis is None or phi.analysis.ground is None:
        raise PreconditionError("Gsp parts of a Gl2 element must carry their special witness")
    return phi.analysis.ground


def l2_leaf(parts: Sequence[Func], coefficients: Sequence[Fraction]) -> Func:
    """
    A Gl2 element sum a_i phi_i with its witness.

    Args:
        parts: G1 elements or certified Gsp elements (from special_leaf)
        coefficients: Rationals with sum a_i^2 <= 1
    """
    f = l2_functional(parts, coefficients)
    witness = GroundWitness(
        TagKind.GL2,
        parts=tuple(_part_witness(phi) for phi in parts),
        part_functionals=tuple(Func(phi.base, phi.tag) for phi in parts),
        coefficients=tuple(Fraction(a) for a in coefficients),
    )
    return leaf(f, witness)


def _random_leaf(rng: random.Random, lo: int, hi: int, profile: ParameterProfile) -> Func:
    if rng.random() < 0.6 or hi == lo:
        return coordinate_leaf(rng.randint(lo, hi), rng.choice((1, -1)))
    width = min(profile.n(1), hi - lo + 1)
    support = sorted(rng.sample(range(lo, hi + 1), rng.randint(1, width)))
    signs = [rng.choice((1, -1)) for _ in support]
    return g1_leaf(1, support, profile, signs)


def _random_split(rng: random.Random, lo: int, hi: int, pieces: int) -> List[Interval]:
    cuts = sorted(rng.sample(range(lo + 1, hi + 1), pieces - 1))
    bounds = [lo] + cuts + [hi + 1]
    return [Interval(a, b - 1) for a, b in zip(bounds, bounds[1:])]


def random_k_functional(rng: random.Random, profile: ParameterProfile, window: Interval,
                        depth: int, even_indices: Sequence[int] = (2, 4)) -> Func:
    """
    A random certified functional of height <= depth supported in a finite window.

    Uses the rules shared by every extension of G_xi: ground leaves (+-e_i* and
    G1^1 elements), even operations on random contiguous splits, l2-combinations
    of distinct-weight operation results with coefficients +-1/d, and convex
    combinations with equal weights.
    """
    if window.hi is None or window.is_empty:
        raise PreconditionError("random_k_functional needs a finite nonempty window")

    def op_result(j: int, lo: int, hi: int, d: int) -> Func:
        pieces = rng.randint(1, min(profile.n(j), hi - lo + 1))
        children = [build(E.lo, E.hi, d - 1) for E in _random_split(rng, lo, hi, pieces)]
        return operation(j, children, profile)

    def build(lo: int, hi: int, d: int) -> Func:
        if d == 0 or rng.random() < 0.25:
            return _random_leaf(rng, lo, hi, profile)
        choice = rng.choice(("op", "op", "l2", "convex"))
        if choice == "op" or (choice == "l2" and d < 2):
            return op_result(rng.choice(list(even_indices)), lo, hi, d)
        if choice == "l2":
            count = rng.randint(1, len(even_indices))
            indices = rng.sample(list(even_indices), count)
            children = [op_result(j, lo, hi, d - 1) for j in indices]
            coeffs = [Fraction(rng.choice((1, -1)), count) for _ in children]
            f = l2_combination(children, coeffs)
            return children[0] if f.is_zero else f
        children = [build(lo, hi, d - 1) for _ in range(2)]
        f = convex_combination(children, [Fraction(1, 2)] * 2)
        if f.is_zero:
            return children[0]
        span = f.range
        if any(c.base.minsupp < span.lo or c.base.maxsupp > span.hi for c in children):
            return children[0]
        return f

    f = build(window.lo, window.hi, depth)
    logger.debug(f"random_k_functional: {f.kind.value} of height {f.analysis.height}")
    return f

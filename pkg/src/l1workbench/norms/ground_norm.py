"""
The norm of X_{G_xi}: sup of phi(x) over G0 u G1 u Gsp u Gl2.

G0 gives the sup norm. A G1^j element sees at most n_{2j-1} coordinates, so
its best value is the top-n_{2j-1} part of |x| over m_{2j-1}^2. A Gsp element
is a window restriction of a registry-realizable special sequence, possibly
extended by one free last entry. Gl2 combinations reach
sqrt(sum v_i^2) over pairwise disjoint index sets (equality in
Cauchy-Schwarz); the finitely many index sets that matter are packed exactly
and the G1 indices beyond them contribute a geometric tail.
"""
import logging
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from l1workbench.normsets.builders import coordinate_leaf, g1_leaf, l2_leaf, special_leaf
from l1workbench.normsets.ground import (
    PACKING_BUDGET,
    XiLike,
    disjoint_packing,
    g1_functional,
    next_admissible_minimum,
    realizable_prefixes,
)
from l1workbench.norms.values import Surd, render, sqrt_upper, surd_max
from l1workbench.spaces.coding import CodingRegistry
from l1workbench.spaces.linspace import Func, Interval, Vec00, apply, canonical_serialize, restrict
from l1workbench.spaces.profiles import ParameterProfile

logger = logging.getLogger(__name__)


class Provenance(str, Enum):
    """How the upper bound of a NormResult was obtained."""
    EXHAUSTIVE = "exhaustive"
    L1_CAP = "l1-cap"
    SATURATION = "depth-saturation"
    SERIES_TAIL = "series-tail"
    SEARCH_CAP = "search-cap"


@dataclass(frozen=True)
class NormResult:
    """
    Certified bracket on a norm.

    The certified norming functional is witness_scale * witness: witness is a
    rational functional with its tree analysis, and witness_scale differs from
    1 only when the best value is an l2-combination with irrational
    coefficients. lower == upper exactly when provenance is EXHAUSTIVE.
    """

    lower: Surd
    upper: Surd
    witness: Optional[Func]
    provenance: Provenance
    depth: int = 0
    witness_scale: Surd = Surd.of(1)
    layers: Dict[str, Surd] = field(default_factory=dict)

    @property
    def exact(self) -> bool:
        return self.provenance == Provenance.EXHAUSTIVE

    def witness_value(self, x: Vec00) -> Surd:
        if self.witness is None:
            return Surd()
        return Surd.of(apply(self.witness, x)) * self.witness_scale

    def to_json(self) -> dict:
        return {
            "lower": render(self.lower),
            "upper": render(self.upper),
            "witness": canonical_serialize(self.witness) if self.witness is not None else None,
            "witness_scale": str(self.witness_scale),
            "depth": self.depth,
            "provenance": self.provenance.value,
            "layers": {name: render(value) for name, value in sorted(self.layers.items())},
        }


def _sign(value: Fraction) -> int:
    return -1 if value < 0 else 1


def _capacity(profile: ParameterProfile, i: int, size: int) -> int:
    """min(n_i, size) without materializing large n_i."""
    return size if profile.n_at_least(i, size) else profile.n(i)


def _top(entries: Sequence[Tuple[int, Fraction]], count: int) -> List[Tuple[int, Fraction]]:
    """The `count` largest entries in absolute value; ties broken by coordinate."""
    ranked = sorted(entries, key=lambda e: (-abs(e[1]), e[0]))
    return sorted(ranked[:count])


@dataclass
class _Candidate:
    value: Fraction
    functional: Func


def _g1_candidates(x: Vec00, profile: ParameterProfile, J: int) -> Dict[frozenset, _Candidate]:
    entries = list(x)
    candidates = {}
    for j in range(1, J + 1):
        chosen = _top(entries, _capacity(profile, 2 * j - 1, len(entries)))
        value = sum((abs(v) for _, v in chosen), Fraction(0)) / profile.m(2 * j - 1) ** 2
        support = [i for i, _ in chosen]
        signs = [_sign(v) for _, v in chosen]
        candidates[frozenset({j})] = _Candidate(value, g1_leaf(j, support, profile, signs))
    return candidates


def _special_candidates(x: Vec00, xi: XiLike, prefixes, profile: ParameterProfile,
                        J: int) -> Dict[frozenset, _Candidate]:
    """Best special functional per index set, over windows with endpoints in supp x."""
    coords = x.support
    best: Dict[frozenset, _Candidate] = {}

    def offer(key: frozenset, value: Fraction, build):
        if value > 0 and (key not in best or value > best[key].value):
            best[key] = _Candidate(value, build())

    for prefix, coded in prefixes:
        if any(f.index > J for f in prefix):
            continue
        minima = tuple(f.base.minsupp for f in prefix)
        start = next_admissible_minimum(minima, xi, prefix[-1].base.maxsupp, coords[-1]) if coded <= J else None
        for a in range(len(coords)):
            for b in range(a, len(coords)):
                E = Interval(coords[a], coords[b])
                pieces = [(f, restrict(f, E)) for f in prefix]
                values = [piece(x) for _, piece in pieces]
                key = frozenset(f.index for f, piece in pieces if not piece.is_zero)
                if not key:
                    continue
                signs = tuple(_sign(v) for v in values)
                total = sum((abs(v) for v in values), Fraction(0))
                offer(key, total, lambda: special_leaf(prefix, signs, E))
                if start is None or max(start, E.lo) > E.hi:
                    continue
                tail = list(x.restrict(Interval(max(start, E.lo), E.hi)))
                if not tail:
                    continue
                chosen = _top(tail, _capacity(profile, 2 * coded - 1, len(tail)))
                free_value = sum((abs(v) for _, v in chosen), Fraction(0)) / profile.m(2 * coded - 1) ** 2

                def extended(chosen=chosen, signs=signs, E=E):
                    free = g1_functional(coded, [i for i, _ in chosen], profile, [_sign(v) for _, v in chosen])
                    return special_leaf(prefix + (free,), signs + (1,), E)

                offer(key | {coded}, total + free_value, extended)
    return best


def norm_ground(x: Vec00, profile: ParameterProfile, registry: Optional[CodingRegistry] = None,
                xi: XiLike = 1, horizon: Optional[int] = None, prefixes=None,
                packing_budget: int = PACKING_BUDGET) -> NormResult:
    """
    ||x||_G with a witness.

    Args:
        x: Finitely supported vector
        profile: Parameter profile
        registry: Coding registry realizing sigma1 (empty when None)
        xi: Schreier order of the special sequences
        horizon: Restrict G1 indices to j <= horizon; the result is then the
            exact norm of the truncated ground set
        prefixes: Precomputed realizable_prefixes(xi, registry, profile)
        packing_budget: Node budget of the disjoint index-set packing; when it
            runs out the upper bound falls back to the sum of all candidate
            squares and provenance is SEARCH_CAP

    Returns:
        NormResult; without a horizon the G1 tail beyond the finite index
        universe makes the upper bound strictly larger than the attained lower
        bound unless the sup norm dominates
    """
    if x.is_zero:
        return NormResult(Surd(), Surd(), None, Provenance.EXHAUSTIVE)
    if prefixes is None:
        prefixes = realizable_prefixes(xi, registry or CodingRegistry(), profile)
    size = len(x)
    saturated_from = profile.first_n_at_least(size, start=1, step=2)
    if horizon is None:
        J = (saturated_from + 1) // 2
        for prefix, coded in prefixes:
            J = max(J, coded, *(f.index for f in prefix))
    else:
        J = horizon

    i_max, v_max = max(x, key=lambda e: (abs(e[1]), -e[0]))
    sup_value = abs(v_max)
    candidates = _g1_candidates(x, profile, J)
    g1_best = max((c.value for c in candidates.values()), default=Fraction(0))
    special = _special_candidates(x, xi, prefixes, profile, J)
    gsp_best = max((c.value for c in special.values()), default=Fraction(0))
    for key, candidate in special.items():
        if key not in candidates or candidate.value > candidates[key].value:
            candidates[key] = candidate

    squares = {key: c.value ** 2 for key, c in candidates.items()}
    square, keys, truncated = disjoint_packing(squares, packing_budget)
    l2_value = Surd.sqrt(square)
    if horizon is None:
        tail = x.l1 ** 2 * profile.m_power_sum(4, 2 * J + 1, 2)[1]
    else:
        tail = Fraction(0)

    if Surd.of(sup_value) >= l2_value:
        witness, scale = coordinate_leaf(i_max, _sign(v_max)), Surd.of(1)
        lower = Surd.of(sup_value)
    elif len(keys) == 1:
        witness, scale = candidates[keys[0]].functional, Surd.of(1)
        lower = l2_value
    else:
        rounded = sqrt_upper(square)
        parts = [candidates[key].functional for key in keys]
        coefficients = [candidates[key].value / rounded for key in keys]
        witness = l2_leaf(parts, coefficients)
        scale = l2_value * (rounded / square)
        lower = l2_value
    packed = sum(squares.values(), Fraction(0)) if truncated else square
    upper = surd_max([Surd.of(sup_value), Surd.sqrt(packed + tail)])
    if upper == lower:
        provenance = Provenance.EXHAUSTIVE
    else:
        provenance = Provenance.SEARCH_CAP if truncated else Provenance.SERIES_TAIL
    layers = {"G0": Surd.of(sup_value), "G1": Surd.of(g1_best), "Gsp": Surd.of(gsp_best), "Gl2": l2_value}
    logger.debug(f"norm_ground: {len(candidates)} index sets, J={J}, lower={lower}, upper={upper}")
    return NormResult(lower, upper, witness, provenance, 0, scale, layers)

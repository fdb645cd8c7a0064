"""
Exhaustive evaluation of the depth-d sub-saturation on very small supports.

The same sub-saturation that norm_extension searches by interval tables,
evaluated by direct recursion over runs of consecutive support coordinates:
type I operations take every family of successive sub-runs (gaps allowed),
odd operations try every stored chain with every free last entry and both
signs, G1 values range over every coordinate subset. Exponential in the
support size; meant as a cross-check for the table search.
"""
import itertools
import logging
from fractions import Fraction
from functools import lru_cache
from typing import Optional, Tuple

from l1workbench.norms.extension import odd_chains, saturation_indices
from l1workbench.norms.values import sqrt_upper
from l1workbench.normsets.ground import realizable_prefixes
from l1workbench.normsets.rules import GroundLayer, RuleSet
from l1workbench.spaces.coding import CodingRegistry, lambda_index
from l1workbench.spaces.linspace import Vec00
from l1workbench.spaces.profiles import ParameterProfile
from l1workbench.utils.errors import PreconditionError

logger = logging.getLogger(__name__)

MAX_SUPPORT = 6
MAX_DEPTH = 3

Run = Tuple[int, ...]


def _sub_runs(run: Run):
    for a in range(len(run)):
        for b in range(a + 1, len(run) + 1):
            yield run[a:b]


def _successive_families(run: Run, count: int):
    """Every family of at most `count` nonempty successive sub-runs."""
    if count == 0 or not run:
        yield ()
        return
    yield ()
    for a in range(len(run)):
        for b in range(a + 1, len(run) + 1):
            for rest in _successive_families(run[b:], count - 1):
                yield (run[a:b],) + rest


def saturation_by_enumeration(x: Vec00, rules: RuleSet, depth: int, profile: ParameterProfile,
                              registry: Optional[CodingRegistry] = None) -> Fraction:
    """
    sup |f(x)| over the depth-d sub-saturation, by exhaustive recursion.

    Raises:
        PreconditionError: support above MAX_SUPPORT, depth above MAX_DEPTH, or
            a G_xi ground layer with realizable special sequences
    """
    registry = registry if registry is not None else CodingRegistry()
    if len(x) > MAX_SUPPORT:
        raise PreconditionError(f"Exhaustive evaluation handles at most {MAX_SUPPORT} coordinates, got {len(x)}")
    if not 0 <= depth <= MAX_DEPTH:
        raise PreconditionError(f"Exhaustive evaluation handles depths 0..{MAX_DEPTH}, got {depth}")
    if rules.ground == GroundLayer.G_XI and realizable_prefixes(rules.xi, registry, profile):
        raise PreconditionError("Exhaustive evaluation does not cover special sequences")
    if x.is_zero:
        return Fraction(0)

    coords = x.support
    _, op_indices, odd_firsts = saturation_indices(len(coords), rules, profile)
    chains = {i: odd_chains(i, rules, profile, registry) for i in odd_firsts}

    def restricted(run: Run) -> Vec00:
        return Vec00.from_mapping({i: x.coeff(i) for i in run})

    def pieces(j: int, run: Run) -> int:
        if profile.n_at_least(j, len(run)):
            return len(run)
        return min(rules.admissibility(j, profile), len(run))

    @lru_cache(maxsize=None)
    def ground(run: Run) -> Fraction:
        values = [abs(x.coeff(i)) for i in run]
        top = max(values)
        if rules.ground == GroundLayer.UNIT:
            return top
        if rules.ground == GroundLayer.C_J0:
            count = len(run) if profile.n_at_least(rules.j0 - 1, len(run)) else profile.n(rules.j0 - 1)
            return max(sum(chosen, Fraction(0)) for chosen in itertools.combinations(values, count))
        J = (profile.first_n_at_least(len(run), start=1, step=2) + 1) // 2
        g1 = []
        for j in range(1, J + 1):
            largest = len(run) if profile.n_at_least(2 * j - 1, len(run)) else profile.n(2 * j - 1)
            best = max(sum(chosen, Fraction(0)) for size in range(1, largest + 1)
                       for chosen in itertools.combinations(values, size))
            g1.append(best / profile.m(2 * j - 1) ** 2)
        if len(g1) == 1:
            return max(top, g1[0])
        square = sum((v * v for v in g1), Fraction(0))
        return max(top, square / sqrt_upper(square))

    @lru_cache(maxsize=None)
    def best(level: int, run: Run) -> Fraction:
        if level == 0:
            return ground(run)
        value = best(level - 1, run)
        for j in op_indices:
            value = max(value, type_one(level, j, run))
        for i in odd_firsts:
            value = max(value, odd(level, i, run))
        if rules.l2_combos:
            square = Fraction(0)
            if level > 1:
                square += sum((type_one(level - 1, j, run) ** 2 for j in op_indices), Fraction(0))
                square += sum((odd(level - 1, i, run) ** 2 for i in odd_firsts), Fraction(0))
            if rules.fresh_coordinates:
                square += sum((x.coeff(i) ** 2 for i in run), Fraction(0))
            if square > 0:
                value = max(value, square / sqrt_upper(square))
        return value

    @lru_cache(maxsize=None)
    def type_one(level: int, j: int, run: Run) -> Fraction:
        if level == 0:
            return Fraction(0)
        total = max(sum((best(level - 1, part) for part in family), Fraction(0))
                    for family in _successive_families(run, pieces(j, run)))
        return total / profile.m(j)

    def free_type_one(level: int, j: int, run: Run) -> Fraction:
        if level == 0:
            return Fraction(0)
        return max((type_one(level, j, part) for part in _sub_runs(run)), default=Fraction(0))

    @lru_cache(maxsize=None)
    def odd(level: int, i: int, run: Run) -> Fraction:
        if level == 0:
            return Fraction(0)
        m = profile.m(i)
        value = type_one(level - 1, odd_firsts[i], run) / m
        y = restricted(run)
        for chain in chains[i]:
            if chain.height >= level:
                continue
            base = sum((f.base.dot(y) for f in chain.entries), Fraction(0))
            after = tuple(t for t in run if t > chain.maxsupp) if chain.open else ()
            if chain.coordinate_next:
                free = [x.coeff(t) for t in after if lambda_index(t) == chain.coded]
                plus = max([Fraction(0)] + free)
                minus = max([Fraction(0)] + [-v for v in free])
            else:
                plus = minus = free_type_one(level - 1, 2 * chain.coded, after)
            value = max(value, (base + plus) / m, (minus - base) / m)
        return value

    result = best(depth, coords)
    logger.debug(f"saturation_by_enumeration[{rules}] depth={depth}: {result}")
    return result

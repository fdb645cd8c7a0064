"""
Depth-bounded norms of the extensions K_xi, K_HI, W_j0 and D_G.

Every norming set here is closed under interval restriction, so the sup over
a saturation level is computed per interval of ran(x) with endpoints in
supp x:

- the lower bound is the exact sup over an explicit depth-d sub-saturation
  (ground leaves, operations by dynamic programming over split points,
  odd operations on registry-realizable attractor or HI chains completed by
  one free last entry, l2-combinations over a finite index horizon with
  rational coefficients) and comes with a certified witness;
- the upper bound iterates the closure operator of the enclosing set
  (every (A_{n_j}, 1/m_j)-operation and all l2 tails) downwards from the
  l1 bound; each iterate dominates the norm of the whole closure.
"""
import logging
from bisect import bisect_right
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Tuple

from l1workbench.norms.ground_norm import NormResult, Provenance, norm_ground
from l1workbench.norms.values import Surd, sqrt_upper
from l1workbench.normsets.attractors import check_attractor_sequence, check_hi_special_sequence, least_first_index
from l1workbench.normsets.auxiliary import c_element
from l1workbench.normsets.builders import coordinate_leaf
from l1workbench.normsets.ground import realizable_prefixes
from l1workbench.normsets.rules import (
    GroundLayer,
    OddPolicy,
    RuleSet,
    l2_combination,
    negate,
    operation,
    restrict_certified,
)
from l1workbench.spaces.coding import SIGMA, CodingRegistry, lambda_index
from l1workbench.spaces.linspace import Func, Interval, Vec00, apply
from l1workbench.spaces.profiles import ParameterProfile
from l1workbench.utils.errors import PreconditionError, ResourceCapError

logger = logging.getLogger(__name__)

Span = Tuple[int, int]
Table = Dict[Span, Fraction]

DEFAULT_ITERATIONS = 12
ODD_MARKS = {OddPolicy.ATTRACTORS: "attractor", OddPolicy.SPECIAL_SEQUENCES: "hi"}


def partition_tables(values: Table, size: int, pieces: int) -> List[Table]:
    """
    tables[c][(p, q)] = max sum of values over partitions of positions p..q into <= c+1 intervals.
    """
    tables = [dict(values)]
    for _ in range(1, pieces):
        previous = tables[-1]
        current: Table = {}
        for p in range(size):
            for q in range(p, size):
                best = previous[(p, q)]
                for r in range(p, q):
                    candidate = values[(p, r)] + previous[(r + 1, q)]
                    if candidate > best:
                        best = candidate
                current[(p, q)] = best
        tables.append(current)
        if current == previous:
            break
    return tables


def _table_at(tables: List[Table], pieces: int) -> Table:
    return tables[min(pieces, len(tables)) - 1]


def _pieces(values: Table, tables: List[Table], pieces: int, span: Span) -> List[Span]:
    """Reconstruct an optimal partition from partition_tables."""
    c = min(pieces, len(tables)) - 1
    p, q = span
    while c > 0 and tables[c][(p, q)] == tables[c - 1][(p, q)]:
        c -= 1
    if c == 0:
        return [(p, q)]
    target = tables[c][(p, q)]
    for r in range(p, q):
        if values[(p, r)] + tables[c - 1][(r + 1, q)] == target:
            return [(p, r)] + _pieces(values, tables, c, (r + 1, q))
    raise AssertionError("partition table is inconsistent")


def saturation_indices(size: int, rules: RuleSet, profile: ParameterProfile,
                       horizon: Optional[int] = None) -> Tuple[int, List[int], Dict[int, int]]:
    """
    Operation indices of the sub-saturation of a vector with `size` coordinates.

    Returns:
        (horizon, operation indices, {odd index i: index 2*j1 of a free first
        attractor entry}); the operation indices reach past the horizon up to
        the largest first-entry index
    """
    first = profile.first_n_at_least(-(-size // rules.admissibility_factor))
    if horizon is None:
        horizon = first + 1 if rules.even_only and first % 2 else first
    op_indices = [j for j in range(1, horizon + 1) if rules.allows_operation(j)]
    odd_firsts: Dict[int, int] = {}
    if rules.operations and rules.even_only and rules.odd_policy != OddPolicy.NONE:
        for i in range(1, horizon + 1, 2):
            odd_firsts[i] = 2 * least_first_index((i + 1) // 2, profile)
        extra = max(odd_firsts.values(), default=0)
        op_indices += [j for j in range(horizon + 1, extra + 1) if rules.allows_operation(j)]
    return horizon, op_indices, odd_firsts


@dataclass(frozen=True)
class OddChain:
    """
    A stored sigma prefix that is an attractor (or HI) sequence for one odd index.

    Attributes:
        entries: The prefix, every entry carrying its tree analysis
        coded: sigma of the whole prefix
        height: Largest analysis height among the entries
        open: One more entry fits below n_{2j-1}
        coordinate_next: The next entry is e*_lambda, lambda in Lambda_coded;
            otherwise an operation result of index 2*coded
    """

    entries: Tuple[Func, ...]
    coded: int
    height: int
    open: bool
    coordinate_next: bool

    @property
    def maxsupp(self) -> int:
        return self.entries[-1].base.maxsupp


def odd_chains(i: int, rules: RuleSet, profile: ParameterProfile, registry: CodingRegistry,
               window: Optional[Interval] = None) -> List[OddChain]:
    """
    Registry-realizable prefixes for the odd operation of index i.

    Prefixes whose entries have no analysis in this process are skipped; so are
    prefixes starting beyond `window`.
    """
    j = (i + 1) // 2
    checker = check_attractor_sequence if rules.odd_policy == OddPolicy.ATTRACTORS else check_hi_special_sequence
    chains = []
    for prefix, coded in registry.items(SIGMA):
        if window is not None and window.hi is not None and prefix[0].base.minsupp > window.hi:
            continue
        certified = registry.certified(prefix)
        if certified is None or not checker(prefix, j, registry, profile):
            continue
        entries = tuple(f if f.analysis is not None else coordinate_leaf(f.base.minsupp, int(f.base.entries[0][1]))
                        for f in certified)
        chains.append(OddChain(
            entries, coded,
            height=max(f.analysis.height for f in entries),
            open=profile.n_at_least(2 * j - 1, len(entries) + 1),
            coordinate_next=rules.odd_policy == OddPolicy.ATTRACTORS and len(entries) % 2 == 1,
        ))
    return chains


@dataclass
class _Saturation:
    """Interval tables of one vector under one rule set."""

    x: Vec00
    rules: RuleSet
    profile: ParameterProfile
    registry: CodingRegistry
    horizon: Optional[int] = None
    coords: Tuple[int, ...] = ()
    prefixes: list = field(default_factory=list)
    ground_cache: Dict[Span, NormResult] = field(default_factory=dict)

    def __post_init__(self):
        self.coords = self.x.support
        self.size = len(self.coords)
        self.spans = [(p, q) for p in range(self.size) for q in range(p, self.size)]
        if self.rules.ground == GroundLayer.G_XI:
            self.prefixes = realizable_prefixes(self.rules.xi, self.registry, self.profile)
        self.all_horizon = self.profile.first_n_at_least(-(-self.size // self.rules.admissibility_factor))
        self.horizon, self.op_indices, self.odd_firsts = saturation_indices(self.size, self.rules, self.profile,
                                                                            self.horizon)
        window = Interval(self.coords[0], self.coords[-1])
        self.chains = {i: odd_chains(i, self.rules, self.profile, self.registry, window) for i in self.odd_firsts}

    def interval(self, span: Span) -> Interval:
        return Interval(self.coords[span[0]], self.coords[span[1]])

    def vector(self, span: Span) -> Vec00:
        return self.x.restrict(self.interval(span))

    def pieces_allowed(self, j: int) -> int:
        if self.profile.n_at_least(j, -(-self.size // self.rules.admissibility_factor)):
            return self.size
        return min(self.rules.admissibility(j, self.profile), self.size)

    # ground layer

    def ground_norm(self, span: Span) -> NormResult:
        if span not in self.ground_cache:
            self.ground_cache[span] = norm_ground(self.vector(span), self.profile, self.registry,
                                                  self.rules.xi, prefixes=self.prefixes)
        return self.ground_cache[span]

    def ground_lower(self, span: Span) -> Tuple[Fraction, Func]:
        y = self.vector(span)
        layer = self.rules.ground
        i, v = max(y, key=lambda e: (abs(e[1]), -e[0]))
        top = (abs(v), coordinate_leaf(i, -1 if v < 0 else 1))
        if layer == GroundLayer.G_XI:
            witness = self.ground_norm(span).witness
            value = apply(witness, y)
            return (value, witness) if value > top[0] else top
        if layer == GroundLayer.UNIT:
            return top
        chosen = self._c_support(y)
        return sum((abs(v) for _, v in chosen), Fraction(0)), c_element([i for i, _ in chosen],
                                                                      [-1 if v < 0 else 1 for _, v in chosen])

    def ground_upper(self, span: Span) -> Fraction:
        layer = self.rules.ground
        if layer == GroundLayer.G_XI:
            return self.ground_norm(span).upper.upper()
        y = self.vector(span)
        if layer == GroundLayer.UNIT:
            return y.sup
        return sum((abs(v) for _, v in self._c_support(y)), Fraction(0))

    def _c_support(self, y: Vec00):
        ranked = sorted(y, key=lambda e: (-abs(e[1]), e[0]))
        if self.profile.n_at_least(self.rules.j0 - 1, len(ranked)):
            return sorted(ranked)
        count = self.profile.n(self.rules.j0 - 1)
        return sorted(ranked[:count])

    def l1(self, span: Span) -> Fraction:
        return self.vector(span).l1

    def l2_square(self, span: Span) -> Fraction:
        return self.vector(span).l2_square


@dataclass
class _Level:
    values: Table
    choice: Dict[Span, tuple]
    type_one: Dict[int, Table]
    odd_choice: Dict[int, Dict[Span, tuple]]
    tables: List[Table]


class _LowerBound:
    """Exact sups over the explicit sub-saturation, level by level, with witnesses."""

    def __init__(self, sat: _Saturation, depth: int):
        self.sat = sat
        self.depth = depth
        self.levels: List[_Level] = []
        self.ground: Dict[Span, Tuple[Fraction, Func]] = {span: sat.ground_lower(span) for span in sat.spans}
        values = {span: self.ground[span][0] for span in sat.spans}
        self.levels.append(_Level(values, {span: ("ground",) for span in sat.spans}, {}, {}, []))
        for _ in range(depth):
            self.levels.append(self._next(self.levels[-1]))
        self.built: Dict[tuple, Func] = {}

    def _next(self, previous: _Level) -> _Level:
        sat = self.sat
        profile = sat.profile
        level = len(self.levels)
        tables = partition_tables(previous.values, sat.size, sat.size) if sat.op_indices else []
        type_one: Dict[int, Table] = {}
        for j in sat.op_indices:
            table = _table_at(tables, sat.pieces_allowed(j))
            type_one[j] = {span: table[span] / profile.m(j) for span in sat.spans}
        odd_choice: Dict[int, Dict[Span, tuple]] = {}
        for i, first in sat.odd_firsts.items():
            chains = [(position, chain) for position, chain in enumerate(sat.chains[i]) if chain.height < level]
            best: Table = {}
            chosen: Dict[Span, tuple] = {}
            for span in sat.spans:
                best[span] = Fraction(0)
                value = previous.type_one.get(first, {}).get(span, Fraction(0)) / profile.m(i)
                if value > 0:
                    best[span], chosen[span] = value, ("first",)
                for position, chain in chains:
                    total, sign, free = self._chain_value(previous, chain, span)
                    value = total / profile.m(i)
                    if value > best[span]:
                        best[span], chosen[span] = value, ("chain", position, sign, free)
            type_one[i] = best
            odd_choice[i] = chosen
        values: Table = {}
        choice: Dict[Span, tuple] = {}
        for span in sat.spans:
            best_value, best_choice = previous.values[span], ("keep",)
            for j, table in type_one.items():
                if table[span] > best_value:
                    best_value, best_choice = table[span], ("type_one", j)
            if sat.rules.l2_combos:
                square = self._l2_square(previous, span)
                if square > 0:
                    value = square / sqrt_upper(square)
                    if value > best_value:
                        best_value, best_choice = value, ("l2",)
            values[span] = best_value
            choice[span] = best_choice
        return _Level(values, choice, type_one, odd_choice, tables)

    def _free_type_one(self, previous: _Level, k: int, span: Span) -> Fraction:
        """Best type I value of index k one level down, for any k."""
        if k in previous.type_one:
            return previous.type_one[k][span]
        if not previous.tables:
            return Fraction(0)
        return _table_at(previous.tables, self.sat.pieces_allowed(k))[span] / self.sat.profile.m(k)

    def _chain_value(self, previous: _Level, chain: OddChain, span: Span) -> Tuple[Fraction, int, Optional[tuple]]:
        """
        max over signs s of s * (sum of the chain entries + free entry) on x restricted to span.

        Returns:
            (value, sign, free entry descriptor or None)
        """
        sat = self.sat
        y = sat.vector(span)
        base = sum((f.base.dot(y) for f in chain.entries), Fraction(0))
        plus: Tuple[Fraction, Optional[tuple]] = (Fraction(0), None)
        minus: Tuple[Fraction, Optional[tuple]] = (Fraction(0), None)
        start = max(bisect_right(sat.coords, chain.maxsupp), span[0])
        if chain.open and start <= span[1]:
            if chain.coordinate_next:
                for position in range(start, span[1] + 1):
                    point = sat.coords[position]
                    if lambda_index(point) != chain.coded:
                        continue
                    v = sat.x.coeff(point)
                    if v > plus[0]:
                        plus = (v, ("coordinate", point))
                    if -v > minus[0]:
                        minus = (-v, ("coordinate", point))
            else:
                k = 2 * chain.coded
                v = self._free_type_one(previous, k, (start, span[1]))
                if v > 0:
                    plus = minus = (v, ("type_one", k, (start, span[1])))
        if base + plus[0] >= minus[0] - base:
            return base + plus[0], 1, plus[1]
        return minus[0] - base, -1, minus[1]

    def _l2_square(self, previous: _Level, span: Span) -> Fraction:
        square = sum((table[span] ** 2 for table in previous.type_one.values()), Fraction(0))
        if self.sat.rules.fresh_coordinates:
            square += self.sat.l2_square(span)
        return square

    def witness(self, level: int, span: Span) -> Func:
        key = ("v", level, span)
        if key not in self.built:
            kind = self.levels[level].choice[span]
            if kind[0] == "keep":
                f = self.witness(level - 1, span)
            elif kind[0] == "ground":
                f = self.ground[span][1]
            elif kind[0] == "type_one":
                f = self.type_one_witness(level, kind[1], span)
            else:
                f = self._l2_witness(level, span)
            self.built[key] = f
        return self.built[key]

    def type_one_witness(self, level: int, j: int, span: Span) -> Func:
        key = ("t", level, j, span)
        if key in self.built:
            return self.built[key]
        sat = self.sat
        current, previous = self.levels[level], self.levels[level - 1]
        if j in current.odd_choice:
            f = self._odd_witness(level, j, span, current.odd_choice[j][span])
        else:
            parts = _pieces(previous.values, current.tables, sat.pieces_allowed(j), span)
            children = [self.witness(level - 1, part) for part in parts if previous.values[part] > 0]
            f = operation(j, children, sat.profile)
        self.built[key] = f
        return f

    def _odd_witness(self, level: int, i: int, span: Span, choice: tuple) -> Func:
        sat = self.sat
        odd = ODD_MARKS[sat.rules.odd_policy]
        if choice[0] == "first":
            child = self.type_one_witness(level - 1, sat.odd_firsts[i], span)
            return operation(i, [child], sat.profile, odd=odd)
        _, position, sign, free = choice
        children = list(sat.chains[i][position].entries)
        if free is not None and free[0] == "coordinate":
            children.append(coordinate_leaf(free[1]))
        elif free is not None:
            g = self.type_one_witness(level - 1, free[1], free[2])
            children.append(g if sign > 0 else negate(g))
        f = operation(i, children, sat.profile, odd=odd)
        if sign < 0:
            f = negate(f)
        E = sat.interval(span)
        if f.base.minsupp < E.lo or f.base.maxsupp > E.hi:
            f = restrict_certified(f, E)
        return f

    def _l2_witness(self, level: int, span: Span) -> Func:
        previous = self.levels[level - 1]
        square = self._l2_square(previous, span)
        rounded = sqrt_upper(square)
        children, coeffs = [], []
        for j in sorted(previous.type_one):
            value = previous.type_one[j][span]
            if value > 0:
                children.append(self.type_one_witness(level - 1, j, span))
                coeffs.append(value / rounded)
        fresh = ()
        if self.sat.rules.fresh_coordinates:
            fresh = tuple((t, v / rounded) for t, v in self.sat.vector(span))
        return l2_combination(children, coeffs, fresh)


class _UpperBound:
    """Post-fixed points of the enclosing closure operator, iterated downwards."""

    def __init__(self, sat: _Saturation):
        self.sat = sat
        rules, profile = sat.rules, sat.profile
        constant = profile.c1_upper() if rules.fresh_coordinates else Fraction(1)
        self.start = {span: constant * sat.l1(span) for span in sat.spans}
        self.indices = list(range(1, sat.all_horizon + 1)) if rules.operations else []
        self.tail = profile.m_power_sum(2, sat.all_horizon + 1)[1]
        self.ground = {span: sat.ground_upper(span) for span in sat.spans}

    def step(self, current: Table) -> Tuple[Table, Dict[int, Table]]:
        sat, profile = self.sat, self.sat.profile
        type_one: Dict[int, Table] = {}
        tables = partition_tables(current, sat.size, sat.size) if self.indices else []
        for j in self.indices:
            table = _table_at(tables, sat.pieces_allowed(j))
            type_one[j] = {span: table[span] / profile.m(j) for span in sat.spans}
        result: Table = {}
        for span in sat.spans:
            value = self.ground[span]
            for table in type_one.values():
                value = max(value, table[span])
            if sat.rules.l2_combos and self.indices:
                square = sum((table[span] ** 2 for table in type_one.values()), Fraction(0))
                square += tables[-1][span] ** 2 * self.tail
                if sat.rules.fresh_coordinates:
                    square += sat.l2_square(span)
                value = max(value, sqrt_upper(square))
            result[span] = min(value, current[span])
        return result, type_one

    def run(self, iterations: int) -> Tuple[Table, Dict[int, Table], int]:
        current = self.start
        type_one: Dict[int, Table] = {}
        performed = 0
        for _ in range(iterations):
            following, type_one = self.step(current)
            performed += 1
            if following == current:
                break
            current = following
        return current, type_one, performed


def _full(sat: _Saturation) -> Span:
    return (0, sat.size - 1)


def norm_extension(x: Vec00, rules: RuleSet, depth: int, profile: ParameterProfile,
                   registry: Optional[CodingRegistry] = None, horizon: Optional[int] = None,
                   iterations: int = DEFAULT_ITERATIONS, depth_cap: Optional[int] = None) -> NormResult:
    """
    Bracket the norm induced by a rule set.

    Args:
        x: Finitely supported vector
        rules: Rule set (K, HI, W:j0, D, WG, or G for the ground norm)
        depth: Saturation depth of the witnessed lower bound
        profile: Parameter profile
        registry: Coding registry for special sequences and odd operations
        horizon: Largest operation index of the lower bound (default: the
            first index whose admissibility covers supp x)
        iterations: Number of downward iterations for the upper bound
        depth_cap: Largest depth computed; beyond it the result at the cap is
            attached to a ResourceCapError

    Returns:
        NormResult with depth-d lower bound and a closure-wide upper bound
    """
    if depth < 0:
        raise PreconditionError(f"depth must be >= 0, got {depth}")
    registry = registry if registry is not None else CodingRegistry()
    if depth_cap is not None and depth > depth_cap:
        partial = norm_extension(x, rules, depth_cap, profile, registry, horizon, iterations)
        raise ResourceCapError(f"depth {depth} exceeds the depth cap {depth_cap}", partial=partial)
    if x.is_zero:
        return NormResult(Surd(), Surd(), None, Provenance.EXHAUSTIVE, depth)
    if not rules.operations and rules.ground == GroundLayer.G_XI:
        return replace(norm_ground(x, profile, registry, rules.xi), depth=depth)

    sat = _Saturation(x, rules, profile, registry, horizon)
    lower = _LowerBound(sat, depth)
    full = _full(sat)
    witness = lower.witness(depth, full)
    value = apply(witness, x)
    if value != lower.levels[depth].values[full]:
        raise AssertionError("witness value differs from the saturation table")

    upper_bound = _UpperBound(sat)
    upper_table, _, performed = upper_bound.run(iterations)
    upper = max(upper_table[full], value)
    if value == upper:
        provenance = Provenance.EXHAUSTIVE
    elif upper == upper_bound.start[full]:
        provenance = Provenance.L1_CAP
    else:
        provenance = Provenance.SATURATION
    last = lower.levels[depth]
    layers = {
        "ground": Surd.of(lower.levels[0].values[full]),
        "type_I": Surd.of(max((t[full] for t in last.type_one.values()), default=Fraction(0))),
    }
    logger.debug(f"norm_extension[{rules}] depth={depth}: lower={value}, upper={upper} "
                 f"after {performed} iterations ({provenance.value})")
    return NormResult(Surd.of(value), Surd.of(upper), witness, provenance, depth, Surd.of(1), layers)


def type_one_bounds(x: Vec00, rules: RuleSet, profile: ParameterProfile,
                    registry: Optional[CodingRegistry] = None, depth: int = 2,
                    iterations: int = DEFAULT_ITERATIONS,
                    max_index: Optional[int] = None) -> Dict[int, Tuple[Fraction, Fraction]]:
    """
    Per-weight bounds on sup{|f(x)| : f type I of weight m_j}.

    Returns:
        {j: (lower, upper)} for j = 1..max_index; the lower bound is attained
        in the depth-d sub-saturation, the upper bound holds over the whole
        enclosing set
    """
    registry = registry if registry is not None else CodingRegistry()
    if x.is_zero:
        return {j: (Fraction(0), Fraction(0)) for j in range(1, (max_index or 1) + 1)}
    sat = _Saturation(x, rules, profile, registry)
    full = _full(sat)
    max_index = max_index or sat.all_horizon
    lower = _LowerBound(sat, depth).levels[depth].type_one if depth > 0 else {}
    upper_bound = _UpperBound(sat)
    table, _, _ = upper_bound.run(iterations)
    _, type_one = upper_bound.step(table)
    saturated = partition_tables(table, sat.size, sat.size)[-1][full]
    result = {}
    for j in range(1, max_index + 1):
        low = lower.get(j, {}).get(full, Fraction(0))
        high = type_one[j][full] if j in type_one else saturated / profile.m(j)
        result[j] = (low, max(low, high))
    return result


def depth_profile(x: Vec00, rules: RuleSet, depths: List[int], profile: ParameterProfile,
                  registry: Optional[CodingRegistry] = None) -> List[Tuple[int, Fraction]]:
    """Lower bounds at several depths; nondecreasing in depth."""
    registry = registry if registry is not None else CodingRegistry()
    if x.is_zero:
        return [(d, Fraction(0)) for d in depths]
    sat = _Saturation(x, rules, profile, registry)
    lower = _LowerBound(sat, max(depths))
    full = _full(sat)
    return [(d, lower.levels[d].values[full]) for d in depths]


def oracle(rules: RuleSet, depth: int, profile: ParameterProfile,
           registry: Optional[CodingRegistry] = None) -> Callable[[Vec00], NormResult]:
    """A norm oracle x -> NormResult for the dual, quotient and game layers."""
    def evaluate(x: Vec00) -> NormResult:
        return norm_extension(x, rules, depth, profile, registry)
    return evaluate

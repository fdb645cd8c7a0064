"""
The ground set G_xi = G0 u G1 u Gsp u Gl2.

G1^j holds (1/m_{2j-1}^2) sum_{i in E} +-e_i* with #E <= n_{2j-1}. Special
sequences are G1 chains f_1 < ... < f_d whose minima lie in S_xi, with
ind(f_1) odd and ind(f_{i+1}) = sigma1(f_1, ..., f_i). Gsp holds the interval
restrictions of their sign sums, Gl2 the l2-combinations of Gsp u G1 elements
with pairwise disjoint index sets.
"""
import itertools
import logging
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

from l1workbench.combinatorics.families import member, schreier
from l1workbench.combinatorics.ordinal import Ordinal
from l1workbench.spaces.coding import SIGMA1, CodingRegistry, in_m1
from l1workbench.spaces.linspace import (
    Func,
    FuncTag,
    GroundWitness,
    Interval,
    TagKind,
    Vec00,
    restrict,
)
from l1workbench.spaces.profiles import ParameterProfile
from l1workbench.utils.errors import PreconditionError

logger = logging.getLogger(__name__)

PACKING_BUDGET = 200000

XiLike = Union[int, Ordinal]


def g1_weight(j: int, profile: ParameterProfile) -> int:
    """w(f) = m_{2j-1}^2 for f in G1^j."""
    return profile.m(2 * j - 1) ** 2


def g1_functional(j: int, support: Iterable[int], profile: ParameterProfile,
                  signs: Optional[Sequence[int]] = None) -> Func:
    """
    The G1^j element (1/m_{2j-1}^2) sum_{i in support} sign_i e_i*.

    Raises:
        PreconditionError: empty support or more than n_{2j-1} coordinates
    """
    support = sorted(set(support))
    if not support:
        raise PreconditionError("G1 functionals need a nonempty support")
    if not profile.n_at_least(2 * j - 1, len(support)):
        raise PreconditionError(f"G1^{j} allows at most n_{2 * j - 1} coordinates, got {len(support)}")
    signs = list(signs) if signs is not None else [1] * len(support)
    if len(signs) != len(support) or any(s not in (1, -1) for s in signs):
        raise PreconditionError("G1 signs must be +-1, one per coordinate")
    weight = g1_weight(j, profile)
    base = Vec00.from_mapping({i: Fraction(s, weight) for i, s in zip(support, signs)})
    return Func(base, FuncTag(TagKind.G1, index=j, weight=weight, components=((j, tuple(support)),)))


def is_g1(f: Func, profile: ParameterProfile) -> bool:
    """Tag and coefficients agree with some G1^j element."""
    if f.kind != TagKind.G1 or f.index is None or f.index < 1 or f.is_zero:
        return False
    weight = g1_weight(f.index, profile)
    if f.weight != weight or not profile.n_at_least(2 * f.index - 1, len(f.support)):
        return False
    return all(abs(v) == Fraction(1, weight) for _, v in f.base)


def g1_enumerate(j: int, window: Interval, profile: ParameterProfile,
                 cap: int = 20000) -> Tuple[List[Func], bool]:
    """
    All nonzero G1^j elements supported in a finite window.

    Subsets come by size, then lexicographically; sign patterns in product
    order with + first.

    Returns:
        (functionals, truncated) where truncated flags that cap was reached
    """
    if window.hi is None:
        raise PreconditionError("g1_enumerate needs a finite window")
    coordinates = list(range(window.lo, window.hi + 1))
    largest = min(profile.n(2 * j - 1), len(coordinates))
    result: List[Func] = []
    for size in range(1, largest + 1):
        for support in itertools.combinations(coordinates, size):
            for signs in itertools.product((1, -1), repeat=size):
                if len(result) >= cap:
                    logger.warning(f"g1_enumerate(j={j}, window={window}) truncated at {cap}")
                    return result, True
                result.append(g1_functional(j, support, profile, signs))
    return result, False


class SequenceFailure(str, Enum):
    """Distinct reasons a candidate special sequence is rejected."""
    EMPTY = "empty sequence"
    NOT_G1 = "entry is not a G1 element"
    ORDERING = "ordering failure"
    START = "j1 not in M1"
    SIGMA1 = "sigma1 mismatch"
    S_XI = "S_xi failure"


@dataclass(frozen=True)
class SequenceCheck:
    ok: bool
    reason: Optional[SequenceFailure] = None
    position: Optional[int] = None

    def __bool__(self):
        return self.ok

    def describe(self) -> str:
        if self.ok:
            return "accepted"
        where = f" at entry {self.position}" if self.position is not None else ""
        return f"{self.reason.value}{where}"


def check_special_sequence(seq: Sequence[Func], xi: XiLike, registry: CodingRegistry,
                           profile: ParameterProfile) -> SequenceCheck:
    """
    Verify the special-sequence conditions against the registry.

    Conditions are tested in a fixed order so that each failure has one
    reason: G1 shape, successive supports with increasing indices, j1 odd,
    the sigma1 chain, and finally the minima in S_xi.
    """
    seq = tuple(seq)
    if not seq:
        return SequenceCheck(False, SequenceFailure.EMPTY)
    for position, f in enumerate(seq, start=1):
        if not is_g1(f, profile):
            return SequenceCheck(False, SequenceFailure.NOT_G1, position)
    for position, (f, g) in enumerate(zip(seq, seq[1:]), start=2):
        if f.base.maxsupp >= g.base.minsupp or f.index >= g.index:
            return SequenceCheck(False, SequenceFailure.ORDERING, position)
    if not in_m1(seq[0].index):
        return SequenceCheck(False, SequenceFailure.START, 1)
    for position in range(1, len(seq)):
        coded = registry.sigma1_lookup(seq[:position])
        if coded is None or coded != seq[position].index:
            return SequenceCheck(False, SequenceFailure.SIGMA1, position + 1)
    minima = tuple(f.base.minsupp for f in seq)
    if not member(schreier(xi), minima):
        return SequenceCheck(False, SequenceFailure.S_XI)
    return SequenceCheck(True)


def build_special_sequence(supports: Sequence[Iterable[int]], xi: XiLike, registry: CodingRegistry,
                           profile: ParameterProfile, j1: int = 1,
                           signs: Optional[Sequence[Sequence[int]]] = None) -> Tuple[Func, ...]:
    """
    Build a special sequence on the given successive supports.

    The first index is j1 (odd); each later index is allocated through sigma1.

    Raises:
        PreconditionError: when the supports cannot carry a special sequence
    """
    if not in_m1(j1):
        raise PreconditionError(f"Special sequences start in M1 (odd indices), got j1={j1}")
    supports = [sorted(set(s)) for s in supports]
    minima = tuple(s[0] for s in supports if s)
    if len(minima) != len(supports):
        raise PreconditionError("Special sequence supports must be nonempty")
    if not member(schreier(xi), minima):
        raise PreconditionError(f"Minima {minima} are not in S({xi})")
    seq: List[Func] = []
    j = j1
    for position, support in enumerate(supports):
        if seq and seq[-1].base.maxsupp >= support[0]:
            raise PreconditionError("Special sequence supports must be successive")
        pattern = signs[position] if signs is not None else None
        seq.append(g1_functional(j, support, profile, pattern))
        if position + 1 < len(supports):
            j = registry.sigma1_assign(seq)
    logger.debug(f"Built special sequence of length {len(seq)} with indices {[f.index for f in seq]}")
    return tuple(seq)


def special_functional(seq: Sequence[Func], signs: Optional[Sequence[int]] = None,
                       window: Optional[Interval] = None) -> Func:
    """
    The Gsp element E sum eps_i f_i, tagged with the index/support of every piece meeting E.
    """
    seq = tuple(seq)
    signs = tuple(signs) if signs is not None else (1,) * len(seq)
    if len(signs) != len(seq) or any(s not in (1, -1) for s in signs):
        raise PreconditionError("Special functional signs must be +-1, one per entry")
    E = window or Interval()
    total = Vec00()
    components = []
    for f, sign in zip(seq, signs):
        piece = restrict(f, E)
        if piece.is_zero:
            continue
        total = total + piece.base.scale(sign)
        components.append((f.index, piece.support))
    return Func(total, FuncTag(TagKind.GSP, components=tuple(components)))


def gsp_witness(seq: Sequence[Func], signs: Sequence[int], window: Optional[Interval]) -> GroundWitness:
    return GroundWitness(TagKind.GSP, sequence=tuple(seq), signs=tuple(signs), window=window)


def l2_functional(parts: Sequence[Func], coefficients: Sequence[Fraction]) -> Func:
    """
    The Gl2 element sum a_i phi_i.

    Raises:
        PreconditionError: if sum a_i^2 > 1 or the index sets overlap
    """
    if len(parts) != len(coefficients):
        raise PreconditionError("l2_functional needs one coefficient per part")
    coefficients = [Fraction(a) for a in coefficients]
    if sum(a * a for a in coefficients) > 1:
        raise PreconditionError("Gl2 coefficients must satisfy sum a_i^2 <= 1")
    seen: set = set()
    total = Vec00()
    components = []
    for phi, a in zip(parts, coefficients):
        if phi.kind not in (TagKind.G1, TagKind.GSP):
            raise PreconditionError(f"Gl2 parts are G1 or Gsp elements, got {phi.kind.value}")
        indices = phi.tag.index_set
        if indices & seen:
            raise PreconditionError(f"Gl2 parts have overlapping index sets: {sorted(indices & seen)}")
        seen |= indices
        total = total + phi.base.scale(a)
        components.extend(phi.tag.components)
    components.sort()
    return Func(total, FuncTag(TagKind.GL2, components=tuple(components)))


def realizable_prefixes(xi: XiLike, registry: CodingRegistry,
                        profile: ParameterProfile) -> List[Tuple[Tuple[Func, ...], int]]:
    """
    Stored sigma1 prefixes that are special sequences for xi, with their sigma1 value.

    The value is the index the next entry must carry.
    """
    result = []
    for prefix, value in registry.items(SIGMA1):
        if check_special_sequence(prefix, xi, registry, profile):
            result.append((prefix, value))
    return result


def next_admissible_minimum(minima: Sequence[int], xi: XiLike, after: int, limit: int) -> Optional[int]:
    """Least t in (after, limit] with minima + (t,) in S_xi; None when there is none."""
    family = schreier(xi)
    for t in range(after + 1, limit + 1):
        if member(family, tuple(minima) + (t,)):
            return t
    return None


@dataclass(frozen=True)
class Segment:
    """A segment (special sequence) of the tree of special sequences."""

    functionals: Tuple[Func, ...]

    @property
    def index_set(self) -> frozenset:
        return frozenset(f.index for f in self.functionals)

    def functional(self, signs: Optional[Sequence[int]] = None) -> Func:
        return special_functional(self.functionals, signs)

    def best_value(self, x: Vec00) -> Fraction:
        """max over F(s) of phi(x) = sum |f_i(x)|."""
        return sum((abs(f(x)) for f in self.functionals), Fraction(0))


def disjoint_packing(values: Dict[frozenset, Fraction],
                     budget: int = PACKING_BUDGET) -> Tuple[Fraction, List[frozenset], bool]:
    """
    Maximize sum of values over pairwise disjoint keys.

    Branch and bound over keys sorted by value; `budget` bounds visited nodes.

    Returns:
        (best value, chosen keys, truncated); when truncated the value is only
        a lower bound on the optimum
    """
    items = sorted(((v, k) for k, v in values.items() if v > 0), key=lambda item: (-item[0], sorted(item[1])))
    suffix = [Fraction(0)] * (len(items) + 1)
    for pos in range(len(items) - 1, -1, -1):
        suffix[pos] = suffix[pos + 1] + items[pos][0]
    best_value = Fraction(0)
    best: List[frozenset] = []
    visited = 0

    def search(pos: int, used: frozenset, value: Fraction, chosen: List[frozenset]):
        nonlocal best_value, best, visited
        visited += 1
        if value > best_value:
            best_value, best = value, list(chosen)
        if pos == len(items) or visited > budget or value + suffix[pos] <= best_value:
            return
        gain, key = items[pos]
        if not key & used:
            chosen.append(key)
            search(pos + 1, used | key, value + gain, chosen)
            chosen.pop()
        search(pos + 1, used, value, chosen)

    search(0, frozenset(), Fraction(0), [])
    truncated = visited > budget
    if truncated:
        logger.warning(f"disjoint_packing stopped after {budget} nodes; result is a lower bound")
    return best_value, best, truncated


def check_tree_property(s: Sequence[Func], t: Sequence[Func]) -> bool:
    """
    Two special sequences either share no entry or agree up to some i0 and then
    share neither entries nor weights.
    """
    s, t = tuple(s), tuple(t)
    i0 = 0
    while i0 < min(len(s), len(t)) and s[i0] == t[i0]:
        i0 += 1
    for i in range(i0, len(s)):
        for j in range(i0, len(t)):
            if s[i] == t[j]:
                return False
            if (i > i0 or j > i0) and s[i].weight == t[j].weight:
                return False
    return True


def special_tree_violations(registry: CodingRegistry, xi: XiLike, profile: ParameterProfile) -> List[str]:
    """Pairs of realizable prefixes breaking the tree property."""
    prefixes = [p for p, _ in realizable_prefixes(xi, registry, profile)]
    problems = []
    for s, t in itertools.combinations(prefixes, 2):
        if not check_tree_property(s, t):
            problems.append(f"tree property fails for prefixes of lengths {len(s)} and {len(t)}")
    return problems

"""
The auxiliary norming sets W_j0 and W'_j0.

W_0 = C_j0 = {sum_{i in F} +-e_i* : #F <= n_{j0-1}}; W_n adds the results of
(A_{2n_j}, 1/m_j)-operations on W_{n-1} and the l2-combinations of
distinct-weight type I elements of W_{n-1} with fresh coordinates. The
enumerators here are window- and depth-bounded, and every output carries its
tree analysis.
"""
import itertools
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from l1workbench.norms.values import Surd
from l1workbench.normsets.rules import l2_combination, leaf, operation
from l1workbench.spaces.linspace import Func, FuncTag, Interval, TagKind, Vec00
from l1workbench.spaces.profiles import UNMET_GROWTH, ParameterProfile
from l1workbench.utils.errors import PreconditionError

logger = logging.getLogger(__name__)

DEFAULT_L2_COEFFICIENTS = (Fraction(1), Fraction(4, 5), Fraction(3, 5), Fraction(1, 2))


def c_element(support: Sequence[int], signs: Optional[Sequence[int]] = None) -> Func:
    """sum_{i in F} sign_i e_i* as a certified C_j0 leaf."""
    signs = list(signs) if signs is not None else [1] * len(support)
    base = Vec00.from_mapping(dict(zip(support, signs)))
    return leaf(Func(base, FuncTag(TagKind.C)))


def c_j0_elements(j0: int, window: Interval, profile: ParameterProfile,
                  cap: int = 20000) -> Tuple[List[Func], bool]:
    """All nonzero elements of C_j0 supported in a finite window."""
    if window.hi is None:
        raise PreconditionError("c_j0_elements needs a finite window")
    coordinates = range(window.lo, window.hi + 1)
    largest = min(profile.n(j0 - 1), len(coordinates))
    result = []
    for size in range(1, largest + 1):
        for support in itertools.combinations(coordinates, size):
            for signs in itertools.product((1, -1), repeat=size):
                if len(result) >= cap:
                    return result, True
                result.append(c_element(support, signs))
    return result, False


class _Full(Exception):
    pass


@dataclass
class _Collector:
    cap: int
    seen: Dict[Tuple[Vec00, FuncTag], Func]

    def add(self, f: Func) -> bool:
        """Store f; False when an equal functional is already known."""
        key = (f.base, f.tag)
        if key in self.seen:
            return False
        if len(self.seen) >= self.cap:
            raise _Full()
        self.seen[key] = f
        return True


def _block_sequences(pool: List[Func], longest: int):
    """Successive tuples from pool of length 1..longest, in a deterministic order."""
    ordered = sorted(pool, key=lambda f: (f.base.minsupp, str(f)))

    def extend(current: Tuple[Func, ...], start: int):
        yield current
        if len(current) == longest:
            return
        last = current[-1].base.maxsupp
        for position in range(start, len(ordered)):
            g = ordered[position]
            if g.base.minsupp > last:
                yield from extend(current + (g,), position + 1)

    for position, f in enumerate(ordered):
        yield from extend((f,), position + 1)


def _l2_patterns(terms: int, coefficients: Sequence[Fraction]):
    """Signed coefficient vectors of a given length inside the l2 unit ball."""
    signed = sorted({c for c in coefficients} | {-c for c in coefficients}, reverse=True)
    for pattern in itertools.product(signed, repeat=terms):
        if sum(c * c for c in pattern) <= 1:
            yield pattern


def w_enumerate(j0: int, depth: int, window: Interval, profile: ParameterProfile, cap: int = 20000,
                max_index: int = 3, max_l2_terms: int = 2,
                coefficients: Sequence[Fraction] = DEFAULT_L2_COEFFICIENTS) -> Tuple[List[Func], bool]:
    """
    Elements of W_0 u ... u W_depth supported in a finite window.

    Operations use indices j <= max_index; l2-combinations use at most
    max_l2_terms summands with coefficients from the given grid.

    Returns:
        (functionals with tree analyses, truncated)
    """
    if depth < 0:
        raise PreconditionError("depth must be >= 0")
    if window.hi is None:
        raise PreconditionError("w_enumerate needs a finite window")
    ground, truncated = c_j0_elements(j0, window, profile, cap)
    collector = _Collector(cap, {})
    for f in ground:
        collector.add(f)
    previous = ground
    coordinates = list(range(window.lo, window.hi + 1))
    try:
        _grow(depth, previous, coordinates, collector, profile, max_index, max_l2_terms, coefficients)
    except _Full:
        truncated = True
    if truncated:
        logger.warning(f"w_enumerate(j0={j0}, depth={depth}, window={window}) truncated at {cap}")
    return list(collector.seen.values()), truncated


def _grow(depth, previous, coordinates, collector, profile, max_index, max_l2_terms, coefficients):
    for level in range(1, depth + 1):
        layer: List[Func] = []
        for j in range(1, max_index + 1):
            longest = 2 * profile.n(j)
            for children in _block_sequences(previous, longest):
                f = operation(j, list(children), profile)
                if collector.add(f):
                    layer.append(f)
        type_one = [f for f in previous if f.kind == TagKind.TYPE_I]
        for terms in range(1, max_l2_terms + 1):
            for fresh_count in range(0, terms + 1):
                for chosen in itertools.combinations(type_one, terms - fresh_count):
                    if len({f.index for f in chosen}) != len(chosen):
                        continue
                    for points in itertools.combinations(coordinates, fresh_count):
                        for pattern in _l2_patterns(terms, coefficients):
                            fresh = tuple(zip(points, pattern[len(chosen):]))
                            f = l2_combination(list(chosen), list(pattern[:len(chosen)]), fresh)
                            if not f.is_zero and collector.add(f):
                                layer.append(f)
        previous = layer
        logger.debug(f"w_enumerate level {level}: {len(layer)} functionals")


def u_factor(f: Func) -> Fraction:
    """u_f = 1/w(f) for type I, 1 otherwise."""
    if f.kind == TagKind.TYPE_I:
        return Fraction(1, f.weight)
    return Fraction(1)


def sup_norm_violations(functionals: Sequence[Func], profile: ParameterProfile) -> List[Tuple[Func, int, Fraction]]:
    """
    Coordinates breaking |f(e_t)| <= c1 * u_f, compared through squares.

    Returns:
        (functional, t, |f(e_t)|) for every violation
    """
    c1_square = profile.c1_square_bounds()[1]
    violations = []
    for f in functionals:
        bound_square = c1_square * u_factor(f) ** 2
        for t, value in f.base:
            if value * value > bound_square:
                violations.append((f, t, abs(value)))
    if violations:
        logger.warning(f"{len(violations)} sup-norm violations at profile {profile.name}")
    return violations


def average_action_bound(weight: int, j0: int, profile: ParameterProfile) -> Tuple[Surd, bool]:
    """
    Bound on |f((1/n_j0) sum_{t in F} e_t)| for a type I f of the given weight, #F = n_j0.

    Returns:
        (bound, asserted); the small-weight branch rests on the growth of n_j
        and is only measured at profiles declaring that growth unmet
    """
    m_j0 = profile.m(j0)
    if weight < m_j0:
        return Surd.of(Fraction(4, weight * m_j0)), not profile.declares_unmet(UNMET_GROWTH)
    c1_square = profile.c1_square_bounds()[1]
    return Surd.sqrt(c1_square) / weight, True


def average_point(points: Sequence[int]) -> Vec00:
    return Vec00.indicator(points, Fraction(1, len(points)))


def average_action_violations(functionals: Sequence[Func], j0: int, profile: ParameterProfile,
                              point_sets: Sequence[Sequence[int]]) -> List[Tuple[Func, Tuple[int, ...], Fraction, Surd]]:
    """
    Type I functionals exceeding average_action_bound on the averages over point_sets.

    Each point set must have n_j0 elements.
    """
    size = profile.n(j0)
    violations = []
    for points in point_sets:
        if len(points) != size:
            raise PreconditionError(f"Average points need n_{j0} = {size} coordinates")
        x = average_point(points)
        for f in functionals:
            if f.kind != TagKind.TYPE_I:
                continue
            bound, _ = average_action_bound(f.weight, j0, profile)
            value = abs(f(x))
            if bound < value:
                violations.append((f, tuple(points), value, bound))
    return violations

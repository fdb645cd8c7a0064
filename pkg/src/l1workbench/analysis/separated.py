"""
Separated sequences, the averaging construction that produces them, and the
tail estimate for Gl2 functionals.

A sequence (x_n) is eps-separated over a universe of functionals when every
phi in the universe satisfies |phi(x_n)| >= eps for at most one n.
"""
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Sequence, Tuple

from l1workbench.norms.values import Surd
from l1workbench.spaces.linspace import Func, Vec00, successive
from l1workbench.spaces.profiles import ParameterProfile
from l1workbench.utils.errors import PreconditionError, ResourceCapError

logger = logging.getLogger(__name__)


@dataclass
class SeparationResult:
    separated: bool
    offenders: List[Tuple[Func, Tuple[int, ...]]] = field(default_factory=list)

    def __bool__(self):
        return self.separated


def _hits(phi: Func, xs: Sequence[Vec00], threshold: Fraction) -> Tuple[int, ...]:
    return tuple(n for n, x in enumerate(xs, start=1) if abs(phi(x)) >= threshold)


def separated_check(xs: Sequence[Vec00], universe: Sequence[Func], eps: Fraction) -> SeparationResult:
    """Every phi hitting two or more of the x_n at level eps is reported."""
    offenders = []
    for phi in universe:
        hits = _hits(phi, xs, eps)
        if len(hits) >= 2:
            offenders.append((phi, hits))
    if offenders:
        logger.info(f"separated_check: {len(offenders)} functionals hit two or more vectors at eps={eps}")
    return SeparationResult(not offenders, offenders)


def hit_counts(ys: Sequence[Vec00], universe: Sequence[Func], threshold: Fraction) -> Tuple[List[int], int]:
    """#{n : |g(y_n)| >= threshold} for every g in the universe, and its maximum."""
    counts = [len(_hits(g, ys, threshold)) for g in universe]
    return counts, max(counts, default=0)


def range_size(x: Vec00) -> int:
    return x.maxsupp - x.minsupp + 1 if not x.is_zero else 0


def growing_averages(xs: Sequence[Vec00]) -> List[Vec00]:
    """y_n = (1/n) sum_{i in F_n} x_i over successive F_n with #F_n = n."""
    ys = []
    position, n = 0, 1
    while position + n <= len(xs):
        total = Vec00()
        for x in xs[position:position + n]:
            total = total + x
        ys.append(total.scale(Fraction(1, n)))
        position += n
        n += 1
    return ys


@dataclass
class SeparatedAverages:
    """
    Attributes:
        ys: All growing averages y_1, y_2, ... (y_l averages l blocks)
        chosen: Selected (j_i, l_i) pairs
        selected: The y_{l_i}
    """

    ys: List[Vec00]
    chosen: List[Tuple[int, int]]
    eps: Fraction
    C: Fraction

    @property
    def selected(self) -> List[Vec00]:
        return [self.ys[l - 1] for _, l in self.chosen]


def selection_holds(result: SeparatedAverages, profile: ParameterProfile) -> bool:
    """Both selection inequalities, re-checked from scratch."""
    previous_j = None
    for j, l in result.chosen:
        y = result.ys[l - 1]
        if not result.eps * profile.m(2 * j - 1) ** 2 > result.C * range_size(y):
            return False
        if previous_j is not None and not result.eps * l > result.C * profile.n(2 * previous_j - 1):
            return False
        previous_j = j
    return True


def build_separated_averages(xs: Sequence[Vec00], C: Fraction, eps: Fraction, profile: ParameterProfile,
                             count: int) -> SeparatedAverages:
    """
    Growing averages of a bounded block sequence and a selection (j_i, l_i) with

        eps * m_{2j_i-1}^2 > C * #ran y_{l_i}   and   eps * l_i > C * n_{2j_{i-1}-1}.

    Raises:
        ResourceCapError: fewer than `count` selections fit in the supplied blocks
    """
    xs = list(xs)
    if not successive(xs) or any(x.is_zero for x in xs):
        raise PreconditionError("build_separated_averages needs a block sequence")
    eps, C = Fraction(eps), Fraction(C)
    if eps <= 0:
        raise PreconditionError("eps must be positive")
    ys = growing_averages(xs)
    chosen: List[Tuple[int, int]] = []
    l, previous_j = 0, None
    while len(chosen) < count:
        l += 1
        if previous_j is not None:
            floor = C * profile.n(2 * previous_j - 1)
            while eps * l <= floor:
                l += 1
        if l > len(ys):
            raise ResourceCapError(f"Only {len(chosen)} of {count} separated averages fit in {len(xs)} blocks",
                                   partial=SeparatedAverages(ys, chosen, eps, C))
        j = previous_j + 1 if previous_j is not None else 1
        while not eps * profile.m(2 * j - 1) ** 2 > C * range_size(ys[l - 1]):
            j += 1
        chosen.append((j, l))
        previous_j = j
    logger.info(f"build_separated_averages: chose {chosen}")
    return SeparatedAverages(ys, chosen, eps, C)


def tail_index(x: Vec00, eps: Fraction, profile: ParameterProfile, limit: int = 64) -> int:
    """
    Least j0 >= 0 with sum_{j > j0} m_{2j-1}^{-4} < (eps / ||x||_1)^2, decided on
    the upper end of the certified series enclosure.
    """
    if eps <= 0 or x.is_zero:
        raise PreconditionError("tail_index needs eps > 0 and x != 0")
    target = (Fraction(eps) / x.l1) ** 2
    for j0 in range(limit + 1):
        if profile.m_power_sum(4, 2 * j0 + 1, 2)[1] < target:
            return j0
    raise ResourceCapError(f"tail_index: no j0 <= {limit}")


def tail_action_bound(x: Vec00, j0: int, profile: ParameterProfile) -> Surd:
    """||x||_1 * (sum_{j > j0} m_{2j-1}^{-4})^{1/2}: bounds g(x) for Gl2 elements g with ind(g) above j0."""
    return Surd.sqrt(profile.m_power_sum(4, 2 * j0 + 1, 2)[1]) * x.l1


def ground_hit_sets(xs: Sequence[Vec00], universe: Sequence[Func], eps: Fraction,
                    limit: int) -> Dict[str, Tuple[int, ...]]:
    """Functionals g of the universe with #{k : |g(x_k)| >= eps} > limit."""
    result = {}
    for g in universe:
        hits = _hits(g, xs, eps)
        if len(hits) > limit:
            result[str(g)] = hits
    return result

"""
Searching for l1^k averages of block sequences and their dual c0 counterparts.

An l1^k average with constant C is x = (1/k) sum_{i<=k} x_i with successive x_i
and ||x_i|| <= C ||x||. The search groups k consecutive vectors; when no group
qualifies, the group averages become the blocks of the next level. Each level
divides the norms by at most C, so a supply of k^r blocks either yields an
average or shows that no level-l grouping below r works.
"""
import logging
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, List, Optional, Sequence, Tuple

from l1workbench.norms.dual import DualResult, Oracle, dual_norm
from l1workbench.spaces.linspace import Func, FuncTag, Interval, TagKind, Vec00, successive
from l1workbench.utils.errors import PreconditionError, ResourceCapError

logger = logging.getLogger(__name__)

L1_MODE = "l1"
C0_MODE = "c0"


@dataclass
class AverageResult:
    """
    Attributes:
        mode: "l1" or "c0"
        vector: The normalized average (l1 mode) or sum of functionals (c0 mode)
        parts: The scaled x_i (l1) or the scaled functionals x*_i (c0)
        constant: Certified max ||x_i|| / ||x|| (l1) or min ||x*_i|| (c0)
        level: Number of averaging levels used
        scale: Factor applied to normalize
    """

    mode: str
    vector: Vec00
    parts: List[Vec00]
    constant: Fraction
    level: int
    scale: Fraction = Fraction(1)
    checks: List[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "mode": self.mode,
            "vector": str(self.vector),
            "parts": [str(p) for p in self.parts],
            "constant": str(self.constant),
            "level": self.level,
            "scale": str(self.scale),
        }


def _check_blocks(blocks: Sequence[Vec00]):
    if any(b.is_zero for b in blocks):
        raise PreconditionError("Blocks must be nonzero")
    if not successive(blocks):
        raise PreconditionError("Blocks must be successive")


def _average(vectors: Sequence[Vec00]) -> Vec00:
    total = Vec00()
    for v in vectors:
        total = total + v
    return total.scale(Fraction(1, len(vectors)))


def _find_l1(blocks: List[Vec00], k: int, C: Fraction, oracle: Oracle, max_levels: int) -> AverageResult:
    level_blocks = [b.scale(1 / oracle(b).lower.lower()) for b in blocks]
    for level in range(1, max_levels + 1):
        groups = [level_blocks[i:i + k] for i in range(0, len(level_blocks) - k + 1, k)]
        if not groups:
            break
        averages = []
        for group in groups:
            y = _average(group)
            y_lower = oracle(y).lower.lower()
            uppers = [oracle(u).upper.upper() for u in group]
            averages.append(y)
            if y_lower > 0 and max(uppers) <= C * y_lower:
                scale = 1 / y_lower
                parts = [u.scale(scale) for u in group]
                constant = max(uppers) / y_lower
                logger.info(f"find_average: l1^{k} average at level {level} with constant <= {constant}")
                return AverageResult(L1_MODE, y.scale(scale), parts, constant, level, scale)
        level_blocks = averages
    raise ResourceCapError(f"No {C}-l1^{k} average among {len(blocks)} blocks within {max_levels} levels")


def _find_c0(blocks: List[Vec00], k: int, dual: Callable[[Func], DualResult], max_levels: int) -> AverageResult:
    level_blocks = list(blocks)
    for level in range(1, max_levels + 1):
        groups = [level_blocks[i:i + k] for i in range(0, len(level_blocks) - k + 1, k)]
        if not groups:
            break
        sums = []
        for group in groups:
            total = Vec00()
            for g in group:
                total = total + g
            sums.append(total)
            bracket = dual(Func(total, FuncTag(TagKind.TYPE_III)))
            if bracket.upper <= 0:
                continue
            scale = 1 / bracket.upper
            lowers = [dual(Func(g, FuncTag(TagKind.TYPE_III))).lower * scale for g in group]
            if min(lowers) >= Fraction(1, 2):
                parts = [g.scale(scale) for g in group]
                logger.info(f"find_average: c0^{k} functionals at level {level}, min norm >= {min(lowers)}")
                return AverageResult(C0_MODE, total.scale(scale), parts, min(lowers), level, scale)
        level_blocks = sums
    raise ResourceCapError(f"No c0^{k} functional average among {len(blocks)} blocks within {max_levels} levels")


def find_average(blocks: Sequence[Vec00], k: int, C: Fraction, mode: str, oracle: Oracle,
                 max_levels: int = 4, dual: Optional[Callable[[Func], DualResult]] = None) -> AverageResult:
    """
    Find a normalized C-l1^k average (mode "l1") or k successive functionals
    with ||sum x*_i|| <= 1 and ||x*_i|| >= 1/2 (mode "c0").

    Args:
        blocks: Successive nonzero vectors (l1) or functional bases (c0)
        k: Length of the average
        C: Target constant (l1 mode)
        mode: "l1" or "c0"
        oracle: Norm oracle of the space
        max_levels: Averaging levels before giving up
        dual: Dual-norm bracket; defaults to cutting planes against the oracle

    Raises:
        ResourceCapError: The supply of blocks is exhausted
    """
    blocks = list(blocks)
    if k < 1:
        raise PreconditionError(f"k must be positive, got {k}")
    _check_blocks(blocks)
    if mode == L1_MODE:
        return _find_l1(blocks, k, Fraction(C), oracle, max_levels)
    if mode == C0_MODE:
        if dual is None:
            window = blocks[-1].maxsupp

            def dual(f: Func) -> DualResult:
                return dual_norm(f, window, oracle)
        return _find_c0(blocks, k, dual, max_levels)
    raise PreconditionError(f"Unknown average mode '{mode}'")


def random_interval_split(rng: random.Random, span: Interval, pieces: int) -> List[Interval]:
    """`pieces` successive intervals covering span."""
    width = span.hi - span.lo + 1
    pieces = max(1, min(pieces, width))
    cuts = sorted(rng.sample(range(span.lo + 1, span.hi + 1), pieces - 1))
    bounds = [span.lo] + cuts + [span.hi + 1]
    return [Interval(a, b - 1) for a, b in zip(bounds, bounds[1:])]


def interval_split_excess(average: AverageResult, oracle: Oracle, intervals: Sequence[Interval]
                          ) -> Tuple[Fraction, Fraction, bool]:
    """
    sum_i ||E_i x|| against C (1 + 2n/k) for an l1^k average x.

    Returns:
        (sum of upper bounds, the bound, whether the sum stays within it)
    """
    if average.mode != L1_MODE:
        raise PreconditionError("interval_split_excess needs an l1 average")
    k = len(average.parts)
    n = len(intervals)
    total = Fraction(0)
    for E in intervals:
        piece = average.vector.restrict(E)
        if not piece.is_zero:
            total += oracle(piece).upper.upper()
    bound = average.constant * (1 + Fraction(2 * n, k))
    return total, bound, total <= bound

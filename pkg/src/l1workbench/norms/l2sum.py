"""
The space (sum_n l1^n)_{l2}: coordinates are grouped into consecutive blocks
of sizes 1, 2, 3, ... and ||x||^2 = sum_n (sum_{i in block n} |x_i|)^2.

Every normalized block sequence spans l1^k uniformly, so it is the reference
space for the average searches.
"""
import logging
import math
from fractions import Fraction
from typing import Dict, Tuple

from l1workbench.norms.ground_norm import NormResult, Provenance
from l1workbench.norms.values import Surd, sqrt_upper
from l1workbench.spaces.linspace import Func, FuncTag, TagKind, Vec00
from l1workbench.utils.errors import PreconditionError

logger = logging.getLogger(__name__)


def block_of(i: int) -> int:
    """Index n of the block containing coordinate i (block n is (n(n-1)/2, n(n+1)/2])."""
    if i < 1:
        raise PreconditionError(f"Coordinates start at 1, got {i}")
    n = (math.isqrt(8 * i) - 1) // 2
    while n * (n + 1) // 2 < i:
        n += 1
    while n > 1 and (n - 1) * n // 2 >= i:
        n -= 1
    return n


def block_range(n: int) -> Tuple[int, int]:
    return n * (n - 1) // 2 + 1, n * (n + 1) // 2


def block_sums(x: Vec00) -> Dict[int, Fraction]:
    sums: Dict[int, Fraction] = {}
    for i, v in x:
        n = block_of(i)
        sums[n] = sums.get(n, Fraction(0)) + abs(v)
    return sums


def norm_l2sum(x: Vec00) -> Fraction:
    """The squared norm, exactly."""
    return sum((s * s for s in block_sums(x).values()), Fraction(0))


def l2sum_result(x: Vec00) -> NormResult:
    """
    ||x|| as an exact NormResult.

    The witness puts b_n / r * sign(x_i) on block n, where b_n is the block
    sum and r >= ||x|| is rational; its value times witness_scale is ||x||.
    """
    square = norm_l2sum(x)
    value = Surd.sqrt(square)
    if square == 0:
        return NormResult(value, value, None, Provenance.EXHAUSTIVE)
    rounded = sqrt_upper(square)
    sums = block_sums(x)
    entries = {i: (sums[block_of(i)] / rounded) * (1 if v > 0 else -1) for i, v in x}
    witness = Func(Vec00.from_mapping(entries), FuncTag(TagKind.TYPE_II))
    scale = value * (rounded / square)
    return NormResult(value, value, witness, Provenance.EXHAUSTIVE, 0, scale)


def l2sum_block_vector(n: int, value: Fraction = Fraction(1)) -> Vec00:
    """The constant vector `value` on block n."""
    lo, hi = block_range(n)
    return Vec00.indicator(range(lo, hi + 1), value)

"""
Dual and quotient norms over finite windows [1, N].

The dual norm is bracketed by cutting planes: the unit ball of the norm is
contained in {x : g(x) <= 1 for every collected norming witness g}, so the LP
optimum over the collected cuts is an upper bound, and every LP iterate x
gives the certified lower bound f(x) / upper(||x||).
"""
import itertools
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from scipy.optimize import linprog

from l1workbench.norms.ground_norm import NormResult
from l1workbench.norms.values import Surd
from l1workbench.spaces.coding import l_member
from l1workbench.spaces.linspace import Func, Vec00, apply
from l1workbench.utils.errors import PreconditionError

logger = logging.getLogger(__name__)

Oracle = Callable[[Vec00], NormResult]

DEFAULT_TOLERANCE = Fraction(1, 10 ** 6)
DEFAULT_MAX_ITERATIONS = 200
LP_SLACK = Fraction(1, 10 ** 9)
GOLDEN = (math.sqrt(5) - 1) / 2


@dataclass
class DualResult:
    """
    Attributes:
        lower: f(x)/upper(||x||) at the best iterate, exact
        upper: LP optimum over the collected cuts, padded by LP_SLACK
        maximizer: The iterate attaining lower
        iterations: LP solves performed
        capped: The iteration cap was hit before the gap closed
    """

    lower: Fraction
    upper: Fraction
    maximizer: Optional[Vec00]
    iterations: int
    capped: bool = False

    def to_json(self) -> dict:
        return {
            "lower": str(self.lower),
            "upper": str(self.upper),
            "maximizer": str(self.maximizer) if self.maximizer is not None else None,
            "iterations": self.iterations,
            "capped": self.capped,
        }


def _rational_vector(values: np.ndarray, denominator: int = 10 ** 6) -> Vec00:
    return Vec00.from_pairs((i + 1, Fraction(float(v)).limit_denominator(denominator))
                            for i, v in enumerate(values) if abs(v) > 1e-12)


def _cut_row(g: Func, N: int) -> List[float]:
    row = [0.0] * N
    for i, v in g.base:
        if i <= N:
            row[i - 1] = float(v)
    return row


def dual_norm(f: Func, N: int, oracle: Oracle, tolerance: Fraction = DEFAULT_TOLERANCE,
              max_iterations: int = DEFAULT_MAX_ITERATIONS) -> DualResult:
    """
    Bracket sup{f(x) : ||x|| <= 1, supp x in [1, N]}.

    Args:
        f: Functional supported in [1, N]
        N: Window size
        oracle: Norm oracle returning NormResults with witnesses
        tolerance: Stop once upper - lower < tolerance
        max_iterations: LP solves before returning a flagged interval

    Returns:
        DualResult; `capped` is set when the gap did not close
    """
    if not f.is_zero and f.base.maxsupp > N:
        raise PreconditionError(f"supp f must lie in [1, {N}]")
    if f.is_zero:
        return DualResult(Fraction(0), Fraction(0), None, 0)
    objective = np.array([-float(v) for v in (f.base.coeff(i) for i in range(1, N + 1))])
    rows: List[List[float]] = []
    seen: set = set()
    bounds = [(-1.0, 1.0)] * N
    lower, best = Fraction(0), None
    upper = sum((abs(v) for _, v in f.base), Fraction(0))
    iterations = 0
    while iterations < max_iterations:
        iterations += 1
        result = linprog(objective, A_ub=np.array(rows) if rows else None,
                         b_ub=np.ones(len(rows)) if rows else None, bounds=bounds, method="highs")
        if not result.success:
            logger.warning(f"dual_norm: LP failed at iteration {iterations}: {result.message}")
            break
        upper = min(upper, Fraction(-float(result.fun)).limit_denominator(10 ** 12) + LP_SLACK)
        x = _rational_vector(result.x)
        if x.is_zero:
            break
        bracket = oracle(x)
        value = apply(f, x) / bracket.upper.upper()
        if value > lower:
            lower, best = value, x
        if upper - lower < tolerance:
            break
        g = bracket.witness
        if g is None:
            break
        for cut in (g, -g):
            key = str(cut.base)
            if key not in seen:
                seen.add(key)
                rows.append(_cut_row(cut, N))
    capped = upper - lower >= tolerance
    if capped:
        logger.warning(f"dual_norm: gap {float(upper - lower):.3g} after {iterations} iterations")
    return DualResult(lower, max(lower, upper), best, iterations, capped)


def grid_dual_lower(f: Func, N: int, oracle: Oracle, steps: int = 2) -> Tuple[Fraction, Optional[Vec00]]:
    """
    max f(x) / upper(||x||) over the grid {k/steps : |k| <= steps}^N.

    A certified lower bound on the dual norm, independent of the cutting-plane
    search; one oracle call per grid point where f is positive.
    """
    if not f.is_zero and f.base.maxsupp > N:
        raise PreconditionError(f"supp f must lie in [1, {N}]")
    levels = [Fraction(int(k), steps) for k in np.arange(-steps, steps + 1)]
    best, arg = Fraction(0), None
    for point in itertools.product(levels, repeat=N):
        x = Vec00.from_mapping({i: v for i, v in enumerate(point, start=1)})
        value = apply(f, x)
        if value <= 0:
            continue
        value /= oracle(x).upper.upper()
        if value > best:
            best, arg = value, x
    logger.debug(f"grid_dual_lower: N={N}, steps={steps}: {float(best):.6g}")
    return best, arg


@dataclass
class QuotientResult:
    """
    ||Q x|| in X/X_L on a window.

    Attributes:
        lower: g(x) for the best certified g vanishing on L
        upper: upper(||x - y||) for the best y in span{e_n : n in L}
        y: The descent's best correction
        witness: The functional attaining lower
    """

    lower: Surd
    upper: Fraction
    y: Vec00
    witness: Optional[Func] = None
    rounds: int = 0

    def to_json(self) -> dict:
        return {
            "lower": str(self.lower),
            "upper": str(self.upper),
            "y": str(self.y),
            "witness": str(self.witness) if self.witness is not None else None,
            "rounds": self.rounds,
        }


def _avoids(g: Func, in_l: Callable[[int], bool]) -> bool:
    return not any(in_l(i) for i in g.support)


def _golden_section(h: Callable[[Fraction], Fraction], lo: Fraction, hi: Fraction,
                    steps: int) -> Tuple[Fraction, Fraction]:
    """Minimize a unimodal h on [lo, hi] with rational trial points."""
    def point(a: Fraction, b: Fraction, weight: float) -> Fraction:
        return (a + (b - a) * Fraction(weight).limit_denominator(10 ** 6)).limit_denominator(10 ** 9)

    c, d = point(lo, hi, 1 - GOLDEN), point(lo, hi, GOLDEN)
    hc, hd = h(c), h(d)
    for _ in range(steps):
        if hc <= hd:
            hi, d, hd = d, c, hc
            c = point(lo, hi, 1 - GOLDEN)
            hc = h(c)
        else:
            lo, c, hc = c, d, hd
            d = point(lo, hi, GOLDEN)
            hd = h(d)
    return (c, hc) if hc <= hd else (d, hd)


def quotient_norm(x: Vec00, N: int, oracle: Oracle, in_l: Callable[[int], bool] = l_member,
                  rounds: int = 3, line_steps: int = 24) -> QuotientResult:
    """
    Bracket the quotient norm of x modulo X_L on [1, N].

    Args:
        x: Vector supported in [1, N]
        N: Window size
        oracle: Norm oracle of the ambient space
        in_l: Membership in L (the Lambda classes of even index by default)
        rounds: Coordinate-descent sweeps over L n [1, N]
        line_steps: Golden-section steps per coordinate

    Returns:
        QuotientResult with lower <= ||Qx|| <= upper
    """
    if not x.is_zero and x.maxsupp > N:
        raise PreconditionError(f"supp x must lie in [1, {N}]")
    lattice = [n for n in range(1, N + 1) if in_l(n)]

    cache: Dict[str, Fraction] = {}

    def upper_of(v: Vec00) -> Fraction:
        key = str(v)
        if key not in cache:
            cache[key] = oracle(v).upper.upper() if not v.is_zero else Fraction(0)
        return cache[key]

    y = Vec00()
    best = upper_of(x)
    radius = x.l1
    performed = 0
    for _ in range(rounds if radius > 0 else 0):
        performed += 1
        improved = False
        for n in lattice:
            current = y.coeff(n)

            def h(t: Fraction, n=n, current=current) -> Fraction:
                return upper_of(x - y - Vec00.unit(n, t - current) if t != current else x - y)

            t, value = _golden_section(h, -radius, radius, line_steps)
            cancel = x.coeff(n)
            if h(cancel) <= value:
                t, value = cancel, h(cancel)
            if value < best:
                y = y + Vec00.unit(n, t - current)
                best = value
                improved = True
        if not improved:
            break

    complement = Vec00.from_pairs((i, v) for i, v in x if not in_l(i))
    lower, witness = Surd(), None
    candidates: List[Tuple[Func, Surd]] = []
    if not complement.is_zero:
        result = oracle(complement)
        if result.witness is not None and _avoids(result.witness, in_l):
            candidates.append((result.witness, result.witness_value(x)))
        for i, v in complement:
            g = Func.coordinate(i, -1 if v < 0 else 1)
            candidates.append((g, Surd.of(abs(v))))
    for g, value in candidates:
        if value > lower:
            lower, witness = value, g
    logger.debug(f"quotient_norm: lower={lower}, upper={best} after {performed} rounds")
    return QuotientResult(lower, best, y, witness, performed)


@dataclass
class QuotientBasisReport:
    unit_norms: Dict[int, QuotientResult] = field(default_factory=dict)
    killed: Dict[int, QuotientResult] = field(default_factory=dict)
    initial_segments: List[Tuple[int, QuotientResult]] = field(default_factory=list)

    @property
    def units_normalized(self) -> bool:
        return all(r.lower == Surd.of(1) and r.upper <= 1 for r in self.unit_norms.values())

    @property
    def kernel_is_l(self) -> bool:
        return all(r.upper == 0 for r in self.killed.values())

    @property
    def segments_consistent(self) -> bool:
        """Brackets of P_k x are compatible with ||Q P_k x|| nondecreasing in k."""
        results = [r for _, r in self.initial_segments]
        return all(a.lower <= Surd.of(b.upper) for i, a in enumerate(results) for b in results[i + 1:])


def quotient_basis_report(N: int, oracle: Oracle, x: Optional[Vec00] = None,
                          in_l: Callable[[int], bool] = l_member) -> QuotientBasisReport:
    """
    Quotient images of the unit vectors on [1, N]; optionally the initial
    segments P_k x of a vector x over N minus L.
    """
    report = QuotientBasisReport()
    for n in range(1, N + 1):
        result = quotient_norm(Vec00.unit(n), N, oracle, in_l, rounds=1)
        (report.killed if in_l(n) else report.unit_norms)[n] = result
    if x is not None:
        outside = [i for i in x.support if not in_l(i)]
        for k in outside:
            segment = Vec00.from_pairs((i, v) for i, v in x if i <= k and not in_l(i))
            report.initial_segments.append((k, quotient_norm(segment, N, oracle, in_l)))
    logger.info(f"quotient_basis_report: {len(report.unit_norms)} basis images, "
                f"{len(report.killed)} killed coordinates")
    return report

"""
The Basic Inequality, constructively.

Given a certified f in K, a (C, eps)-RIS (x_k), scalars (c_k) and an interval
I, build g in W_j0 with

    |f(sum_{k in I} c_k x_k)| <= C (g(sum_{k in I} |c_k| e_k) + eps_f sum_{k in I} |c_k|)

by walking the tree analysis of f bottom-up:

- ground leaves give sum_{k in R_f} e_k* over R_f = {k : |f(x_k)| >= eps};
- an operation of weight m_j0 (with the additional assumption) gives
  |f(x_k0)| e_k0* at the largest |c_k f(x_k)|;
- other operations split by how their weight compares with the m_{2j_k}:
  below every threshold the children are recombined by an
  (A_{2n_j}, 1/m_j)-operation together with e_k* for the x_k met by two
  children; between two consecutive thresholds one coordinate survives; above
  all of them g = 0;
- l2-combinations keep the children of the first kind and fold the
  single-coordinate children into fresh coordinates;
- convex combinations recombine convexly.

Every g produced is coordinatewise nonnegative.
"""
import logging
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from l1workbench.analysis.ris import RISWitness
from l1workbench.norms.ground_norm import NormResult
from l1workbench.norms.values import Surd
from l1workbench.normsets.auxiliary import c_element
from l1workbench.normsets.rules import (
    MembershipResult,
    RuleSet,
    convex_combination,
    l2_combination,
    operation,
    verify_membership,
)
from l1workbench.spaces.linspace import AnalysisNode, Func, Interval, Rule, Vec00, restrict
from l1workbench.spaces.profiles import ParameterProfile
from l1workbench.utils.errors import PreconditionError

logger = logging.getLogger(__name__)

LEAF = "leaf"
WEIGHT_J0 = "weight-j0"
BELOW = "2a"
BETWEEN = "2b"
ABOVE = "2c"
L2 = "l2"
CONVEX = "convex"
EMPTY = "empty"


@dataclass
class _Piece:
    g: Optional[Func]
    eps: Surd
    case: str
    k0: Optional[int] = None
    value: Fraction = Fraction(0)


@dataclass
class BasicInequalityCertificate:
    """
    Attributes:
        f: The input functional
        interval: (first, last) positions of I, 1-based
        g: Functional of W_j0 (None stands for 0)
        eps_f: The error term of the inequality
        lhs: |f(sum c_k x_k)|
        rhs: C (g(sum |c_k| e_k) + eps_f sum |c_k|)
        membership: Replay of g against W_j0
        cases: How often each case of the construction fired
    """

    f: Func
    coefficients: List[Fraction]
    interval: Tuple[int, int]
    j0: int
    g: Optional[Func]
    eps_f: Surd
    lhs: Fraction
    rhs: Surd
    membership: MembershipResult
    cases: Dict[str, int] = field(default_factory=dict)
    avoids_j0: bool = True
    root_form: bool = True

    @property
    def holds(self) -> bool:
        return Surd.of(self.lhs) <= self.rhs and bool(self.membership)

    def to_json(self) -> dict:
        return {
            "f": str(self.f),
            "coefficients": [str(c) for c in self.coefficients],
            "interval": list(self.interval),
            "j0": self.j0,
            "g": str(self.g) if self.g is not None else None,
            "eps_f": str(self.eps_f),
            "lhs": str(self.lhs),
            "rhs": str(self.rhs),
            "member": bool(self.membership),
            "cases": dict(sorted(self.cases.items())),
            "avoids_j0": self.avoids_j0,
            "root_form": self.root_form,
            "holds": self.holds,
        }


def _meet(a: Optional[Interval], b: Optional[Interval]) -> Optional[Interval]:
    if a is None:
        return b
    if b is None:
        return a
    return a.intersect(b)


def _ranges_meet(f: Func, x: Vec00) -> bool:
    if f.is_zero or x.is_zero:
        return False
    return f.base.minsupp <= x.maxsupp and x.minsupp <= f.base.maxsupp


def _fresh(k: int, value: Fraction) -> Optional[Func]:
    """|value| e_k* as an l2-combination with one fresh coordinate."""
    if value == 0:
        return None
    return l2_combination([], [], ((k, abs(value)),))


class _Construction:
    def __init__(self, ris: RISWitness, coefficients: Sequence[Fraction], j0: int, ada: bool,
                 profile: ParameterProfile):
        self.xs = ris.vectors
        self.ris = ris
        self.C = ris.C
        self.eps = ris.eps
        self.coefficients = list(coefficients)
        self.j0 = j0
        self.ada = ada
        self.profile = profile
        self.cases: Counter = Counter()

    def effective(self, node: AnalysisNode, window: Optional[Interval]) -> Func:
        return restrict(node.functional, window) if window is not None else node.functional

    def values(self, f: Func, ks: Sequence[int]) -> Dict[int, Fraction]:
        return {k: f(self.xs[k - 1]) for k in ks}

    def threshold(self, k: int) -> Optional[int]:
        j = self.ris.j(k)
        return self.profile.m(2 * j) if j is not None else None

    def piece(self, node: AnalysisNode, window: Optional[Interval], ks: Sequence[int]) -> _Piece:
        f = self.effective(node, window)
        ks = [k for k in ks if _ranges_meet(f, self.xs[k - 1])]
        if not ks:
            self.cases[EMPTY] += 1
            return _Piece(None, Surd(), EMPTY)
        inner = _meet(window, node.window)
        if node.rule == Rule.GROUND_LEAF:
            return self.leaf(f, ks)
        if node.rule == Rule.OP_J:
            return self.type_one(node, f, inner, ks)
        if node.rule == Rule.L2_COMBO:
            return self.type_two(node, inner, ks)
        return self.convex(node, inner, ks)

    def leaf(self, f: Func, ks: List[int]) -> _Piece:
        values = self.values(f, ks)
        hits = [k for k in ks if abs(values[k]) >= self.eps]
        limit = self.profile.n(self.j0 - 1)
        if len(hits) > limit:
            raise PreconditionError(f"A ground functional hits {len(hits)} > n_{self.j0 - 1} = {limit} "
                                    f"vectors at level eps")
        self.cases[LEAF] += 1
        return _Piece(c_element(hits) if hits else None, Surd.of(self.eps), LEAF)

    def type_one(self, node: AnalysisNode, f: Func, inner: Optional[Interval], ks: List[int]) -> _Piece:
        weight = self.profile.m(node.j)
        values = self.values(f, ks)
        if self.ada and node.j == self.j0:
            k0 = max(ks, key=lambda k: (abs(self.coefficients[k - 1] * values[k]), -k))
            self.check_additional_assumption(f, ks, values)
            self.cases[WEIGHT_J0] += 1
            return _Piece(_fresh(k0, values[k0]), Surd.sqrt(Fraction(1, weight)) * self.eps, WEIGHT_J0,
                          k0, abs(values[k0]))
        reached = [k for k in ks if self.threshold(k) <= weight]
        if not reached:
            return self.below(node, inner, ks, weight)
        k0 = max(reached)
        following = self.threshold(k0 + 1)
        eps_f = Surd.sqrt(Fraction(1, weight)) * self.eps
        if following is None or weight < following:
            self.cases[BETWEEN] += 1
            return _Piece(_fresh(k0, values[k0]), eps_f, BETWEEN, k0, abs(values[k0]))
        self.cases[ABOVE] += 1
        return _Piece(None, eps_f, ABOVE)

    def below(self, node: AnalysisNode, inner: Optional[Interval], ks: List[int], weight: int) -> _Piece:
        children = [(child, self.effective(child, inner)) for child in node.children]
        children = [(child, g) for child, g in children if not g.is_zero]
        met: Dict[int, List[int]] = {}
        for k in ks:
            met[k] = [i for i, (_, g) in enumerate(children) if _ranges_meet(g, self.xs[k - 1])]
        shared = [k for k in ks if len(met[k]) >= 2]
        parts: List[Func] = [c_element([k]) for k in shared]
        for i, (child, _) in enumerate(children):
            own = [k for k in ks if met[k] == [i]]
            if own:
                sub = self.piece(child, inner, own)
                if sub.g is not None:
                    parts.append(sub.g)
        self.cases[BELOW] += 1
        if not parts:
            return _Piece(None, Surd.of(self.eps / weight), BELOW)
        parts.sort(key=lambda g: g.base.minsupp)
        return _Piece(operation(node.j, parts, self.profile), Surd.of(self.eps / weight), BELOW)

    def type_two(self, node: AnalysisNode, inner: Optional[Interval], ks: List[int]) -> _Piece:
        kept, coeffs = [], []
        fresh: Dict[int, Fraction] = {}
        eps_f = Surd()
        for child, coefficient in zip(node.children, node.coeffs):
            sub = self.piece(child, inner, ks)
            eps_f = eps_f + sub.eps * abs(coefficient)
            if sub.g is None:
                continue
            if sub.case == BELOW:
                kept.append(sub.g)
                coeffs.append(abs(coefficient))
            elif sub.k0 is not None:
                fresh[sub.k0] = fresh.get(sub.k0, Fraction(0)) + abs(coefficient) * sub.value
        for t, mu in node.fresh:
            if inner is None or t in inner:
                for k in ks:
                    if self.xs[k - 1].coeff(t) != 0:
                        fresh[k] = fresh.get(k, Fraction(0)) + abs(mu * self.xs[k - 1].coeff(t))
        self.cases[L2] += 1
        if not kept and not fresh:
            return _Piece(None, eps_f, L2)
        g = l2_combination(kept, coeffs, tuple(sorted(fresh.items())))
        return _Piece(g, eps_f, L2)

    def convex(self, node: AnalysisNode, inner: Optional[Interval], ks: List[int]) -> _Piece:
        kept, weights = [], []
        eps_f = Surd()
        for child, r in zip(node.children, node.coeffs):
            sub = self.piece(child, inner, ks)
            eps_f = eps_f + sub.eps * r
            if sub.g is not None and r > 0:
                kept.append(sub.g)
                weights.append(r)
        self.cases[CONVEX] += 1
        if not kept:
            return _Piece(None, eps_f, CONVEX)
        total = sum(weights, Fraction(0))
        return _Piece(convex_combination(kept, [r / total for r in weights]), eps_f, CONVEX)

    def check_additional_assumption(self, f: Func, ks: List[int], values: Dict[int, Fraction]):
        """|f(sum c_k x_k)| <= C (max |c_k f(x_k)| + eps m_j0^{-1/2} sum |c_k|) on the interval ks."""
        total = Vec00()
        for k in ks:
            total = total + self.xs[k - 1].scale(self.coefficients[k - 1])
        lhs = Surd.of(abs(f(total)))
        peak = max(abs(self.coefficients[k - 1] * values[k]) for k in ks)
        mass = sum((abs(self.coefficients[k - 1]) for k in ks), Fraction(0))
        rhs = (Surd.of(peak) + Surd.sqrt(Fraction(1, self.profile.m(self.j0))) * (self.eps * mass)) * self.C
        if rhs < lhs:
            raise PreconditionError(f"The additional assumption fails for a weight m_{self.j0} functional")


def _uses_index(g: Func, j: int) -> bool:
    return g.analysis is not None and any(n.rule == Rule.OP_J and n.j == j for n in g.analysis.nodes())


def _root_form(f: Func, g: Optional[Func], eps_f: Surd, eps: Fraction, profile: ParameterProfile) -> bool:
    """For type I f: g is 0, a multiple of some e_r*, or an operation result, and eps_f <= eps w(f)^{-1/2}."""
    node = f.analysis
    if node is None or node.rule != Rule.OP_J:
        return True
    if eps_f > Surd.sqrt(Fraction(1, profile.m(node.j))) * eps:
        return False
    if g is None:
        return True
    return g.analysis.rule == Rule.OP_J or len(g.base) == 1


def certify_basic_inequality(f: Func, ris: RISWitness, coefficients: Sequence[Fraction],
                             interval: Tuple[int, int], j0: int, profile: ParameterProfile,
                             ada: bool = False) -> BasicInequalityCertificate:
    """
    Construct g in W_j0 for f, the RIS, the coefficients and the interval.

    Args:
        f: Functional of K carrying its tree analysis
        ris: A RIS whose conditions hold
        coefficients: c_k, one per RIS vector
        interval: (first, last) positions of I, 1-based and inclusive
        j0: Index of the auxiliary set, j0 > 1
        ada: Use the weight-m_j0 case (its assumption is checked where used)

    Raises:
        PreconditionError: the RIS fails, or a ground functional hits more than
            n_{j0-1} vectors at level eps
    """
    if f.analysis is None:
        raise PreconditionError("certify_basic_inequality needs a tree analysis of f")
    if j0 < 2:
        raise PreconditionError(f"j0 must exceed 1, got {j0}")
    if not ris.holds:
        raise PreconditionError(f"The sequence is not a RIS (condition {ris.failed})")
    if len(coefficients) != len(ris.vectors):
        raise PreconditionError("One coefficient per RIS vector required")
    first, last = interval
    if not 1 <= first <= last <= len(ris.vectors):
        raise PreconditionError(f"Interval {interval} is outside 1..{len(ris.vectors)}")
    coefficients = [Fraction(c) for c in coefficients]
    construction = _Construction(ris, coefficients, j0, ada, profile)
    ks = list(range(first, last + 1))
    piece = construction.piece(f.analysis, None, ks)

    total = Vec00()
    mass = Fraction(0)
    for k in ks:
        total = total + ris.vectors[k - 1].scale(coefficients[k - 1])
        mass += abs(coefficients[k - 1])
    lhs = abs(f(total))
    profile_vector = Vec00.from_pairs((k, abs(coefficients[k - 1])) for k in ks)
    g_value = piece.g(profile_vector) if piece.g is not None else Fraction(0)
    rhs = (Surd.of(g_value) + piece.eps * mass) * ris.C
    if piece.g is not None:
        membership = verify_membership(piece.g, RuleSet.w(j0), profile)
    else:
        membership = MembershipResult(True)
    certificate = BasicInequalityCertificate(
        f, coefficients, interval, j0, piece.g, piece.eps, lhs, rhs, membership, dict(construction.cases),
        avoids_j0=not ada or piece.g is None or not _uses_index(piece.g, j0),
        root_form=_root_form(f, piece.g, piece.eps, ris.eps, profile),
    )
    if not certificate.holds:
        logger.warning(f"Basic inequality fails: lhs={lhs}, rhs={rhs}, member={bool(membership)}")
    return certificate


@dataclass
class AverageBound:
    functional: Func
    value: Fraction
    bound: Fraction
    holds: bool


@dataclass
class AverageBoundsReport:
    average: Vec00
    rows: List[AverageBound]
    norm_bound: Fraction
    norm: Optional[NormResult] = None

    @property
    def holds(self) -> bool:
        rows = all(row.holds for row in self.rows)
        return rows and (self.norm is None or self.norm.lower <= self.norm_bound)


def ris_average_bounds(ris: RISWitness, j: int, functionals: Sequence[Func], profile: ParameterProfile,
                       oracle=None) -> AverageBoundsReport:
    """
    Type I actions on (1/n_j) sum_{k <= n_j} x_k against 5C/(m_j w) (w < m_j)
    and c1 C/w + 2C/m_j^2 (w >= m_j); the norm of the average against 3C/m_j.

    The bounds presuppose eps <= 2/m_j^2 and j < j_1.
    """
    n = profile.n(j)
    if len(ris.vectors) < n:
        raise PreconditionError(f"Averages of length n_{j} = {n} need {n} RIS vectors")
    m = profile.m(j)
    if ris.eps > Fraction(2, m * m):
        raise PreconditionError(f"eps = {ris.eps} exceeds 2/m_{j}^2")
    average = Vec00()
    for x in ris.vectors[:n]:
        average = average + x
    average = average.scale(Fraction(1, n))
    c1 = profile.c1_upper()
    rows = []
    for f in functionals:
        if f.weight is None or f.analysis is None or f.analysis.rule != Rule.OP_J:
            continue
        w = f.weight
        bound = 5 * ris.C / (m * w) if w < m else c1 * ris.C / w + 2 * ris.C / (m * m)
        value = abs(f(average))
        rows.append(AverageBound(f, value, bound, value <= bound))
    norm = oracle(average) if oracle is not None else None
    return AverageBoundsReport(average, rows, 3 * ris.C / m, norm)

"""
Exact pairs and attracting sequences.

An exact pair (x, f) of index 2j has f(x) = 1, ran f = ran x, f of type I with
w(f) = m_{2j}, 1 <= ||x|| <= 3C, ||x||_inf <= m_{2j}^{-2} and type I actions
|g(x)| <= 5C/w(g) (w(g) < m_{2j}) or 5C/m_{2j} (w(g) > m_{2j}).

An attracting sequence alternates exact pairs (x_{2k-1}, f_{2k-1}) with
(e_l, e_l*) for l in Lambda_{sigma(f_1, ..., f_{2k-1})}; its functionals form an
attractor sequence.
"""
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from l1workbench.analysis.ris import ConditionResult, Granularity
from l1workbench.norms.extension import type_one_bounds
from l1workbench.norms.ground_norm import NormResult, norm_ground
from l1workbench.normsets.attractors import (
    AttractorCheck,
    build_attractor_sequence,
    check_attractor_sequence,
    first_lambda_after,
    least_first_index,
)
from l1workbench.normsets.builders import g1_leaf
from l1workbench.normsets.rules import (
    MembershipResult,
    RuleSet,
    operation,
    restrict_certified,
    verify_membership,
)
from l1workbench.spaces.coding import CodingRegistry
from l1workbench.spaces.linspace import Func, Interval, TagKind, Vec00
from l1workbench.spaces.profiles import UNMET_ATTRACTOR_UPPER, UNMET_EXACT_PAIR_SUP, ParameterProfile
from l1workbench.utils.errors import PreconditionError, ResourceCapError

logger = logging.getLogger(__name__)

Oracle = Callable[[Vec00], NormResult]
PairSource = Callable[[int, int], Tuple[Vec00, Func]]

ATTRACTOR_ODD = "attractor"


@dataclass
class ExactPair:
    """
    Attributes:
        x: The vector
        f: The type I functional with its tree analysis
        C: Constant of the pair
        index: 2j, with w(f) = m_{2j}
        conditions: Per-clause verdicts
        waived: Clauses the profile declares unmet; measured, never asserted
    """

    x: Vec00
    f: Func
    C: Fraction
    index: int
    conditions: Dict[str, ConditionResult] = field(default_factory=dict)
    waived: List[str] = field(default_factory=list)

    @property
    def holds(self) -> bool:
        return all(c.holds for name, c in self.conditions.items() if name not in self.waived)

    def to_json(self) -> dict:
        return {
            "x": str(self.x),
            "f": str(self.f),
            "C": str(self.C),
            "index": self.index,
            "conditions": {name: c.to_json() for name, c in sorted(self.conditions.items())},
            "waived": self.waived,
            "holds": self.holds,
        }


def _norm_condition(x: Vec00, C: Fraction, oracle: Oracle, member: bool) -> ConditionResult:
    result = oracle(x)
    if result.lower > 3 * C:
        return ConditionResult(False, Granularity.EXACT, f"||x|| >= {result.lower} > 3C")
    if not member and result.lower < 1:
        return ConditionResult(False, Granularity.MEASURED, f"no certified lower bound 1, measured {result.lower}")
    if result.upper > 3 * C:
        return ConditionResult(True, Granularity.MEASURED, f"upper bound {result.upper.upper()} exceeds 3C")
    return ConditionResult(True, Granularity.EXACT)


def _action_condition(x: Vec00, C: Fraction, index: int, rules: RuleSet, profile: ParameterProfile,
                      registry: CodingRegistry, sample: Sequence[Func]) -> ConditionResult:
    weight = profile.m(index)
    largest = index + 2
    bounds = type_one_bounds(x, rules, profile, registry, max_index=largest)
    undecided = []
    for j in range(1, largest + 1):
        if j == index:
            continue
        limit = 5 * C / profile.m(j) if j < index else 5 * C / weight
        lower, upper = bounds[j]
        if lower > limit:
            return ConditionResult(False, Granularity.EXACT, f"a weight m_{j} functional reaches {lower} > {limit}")
        if upper > limit:
            undecided.append(j)
    for g in sample:
        if g.kind != TagKind.TYPE_I or g.weight == weight:
            continue
        limit = 5 * C / g.weight if g.weight < weight else 5 * C / weight
        if abs(g(x)) > limit:
            return ConditionResult(False, Granularity.SAMPLED, f"{g} violates the action bound")
    if undecided:
        return ConditionResult(True, Granularity.SAMPLED, f"weights m_j, j in {undecided}, checked on the sample only")
    return ConditionResult(True, Granularity.SAMPLED, f"weights up to m_{largest}; higher weights sampled")


def check_exact_pair(x: Vec00, f: Func, C: Fraction, index: int, oracle: Oracle, profile: ParameterProfile,
                     registry: Optional[CodingRegistry] = None, rules: Optional[RuleSet] = None,
                     sample: Sequence[Func] = (), actions: bool = True) -> ExactPair:
    """
    Evaluate every clause of the exact-pair definition.

    Args:
        x: Vector
        f: Functional carrying its tree analysis
        C: Constant
        index: 2j
        oracle: Norm oracle for 1 <= ||x|| <= 3C
        rules: Norming set f must belong to (K by default)
        sample: Type I functionals checked on top of the closure-wide bounds
        actions: Evaluate the type I action clause
    """
    if index % 2:
        raise PreconditionError(f"Exact pairs have even index, got {index}")
    registry = registry if registry is not None else CodingRegistry()
    rules = rules or RuleSet.k_xi()
    C = Fraction(C)
    pair = ExactPair(x, f, C, index)
    weight = profile.m(index)
    value = f(x)
    pair.conditions["value"] = ConditionResult(value == 1, Granularity.EXACT, f"f(x) = {value}")
    same_range = not x.is_zero and not f.is_zero and x.range == f.range
    pair.conditions["range"] = ConditionResult(same_range, Granularity.EXACT,
                                               "" if same_range else f"ran x = {x.range}, ran f = {f.range}")
    membership = verify_membership(f, rules, profile, registry) if f.analysis is not None else MembershipResult(False)
    typed = f.kind == TagKind.TYPE_I and f.weight == weight
    pair.conditions["weight"] = ConditionResult(typed and bool(membership), Granularity.EXACT,
                                                membership.reason if not membership else "")
    pair.conditions["norm"] = _norm_condition(x, C, oracle, bool(membership) and value == 1)
    sup_ok = x.sup * weight * weight <= 1
    pair.conditions["sup"] = ConditionResult(sup_ok, Granularity.EXACT, f"||x||_inf = {x.sup}")
    if not sup_ok and profile.declares_unmet(UNMET_EXACT_PAIR_SUP):
        pair.waived.append("sup")
    if actions:
        pair.conditions["actions"] = _action_condition(x, C, index, rules, profile, registry, sample)
    return pair


def _block_average(start: int, size: int) -> Vec00:
    return Vec00.indicator(range(start, start + size), Fraction(1, size))


def build_exact_pair(window: Interval, j: int, oracle: Oracle, profile: ParameterProfile,
                     registry: Optional[CodingRegistry] = None, block: int = 2, C: Fraction = Fraction(3),
                     rules: Optional[RuleSet] = None, sample: Sequence[Func] = ()) -> ExactPair:
    """
    An exact pair of index 2j inside the window.

    The n_{2j} pieces are flat averages of `block` unit vectors scaled so that
    the oracle's witness f_i gives f_i(x_i) = 1; then f = m_{2j}^{-1} sum f_i
    and x = E (m_{2j}/n_{2j}) sum x_i with E = ran f.

    Raises:
        ResourceCapError: the window cannot hold n_{2j} blocks
    """
    n, m = profile.n(2 * j), profile.m(2 * j)
    if window.hi is not None and window.lo + n * block - 1 > window.hi:
        raise ResourceCapError(f"Window {window} cannot hold {n} blocks of size {block}")
    registry = registry if registry is not None else CodingRegistry()
    pieces: List[Vec00] = []
    functionals: List[Func] = []
    for i in range(n):
        y = _block_average(window.lo + i * block, block)
        result = oracle(y)
        if result.witness is None or result.witness.analysis is None:
            raise PreconditionError("The oracle must return certified witnesses")
        g = restrict_certified(result.witness, y.range)
        scale = g(y)
        if scale <= 0:
            raise PreconditionError(f"Witness vanishes on block {i + 1}")
        pieces.append(y.scale(1 / scale))
        functionals.append(g)
    f = operation(2 * j, functionals, profile)
    total = Vec00()
    for piece in pieces:
        total = total + piece
    x = total.scale(Fraction(m, n)).restrict(f.range)
    pair = check_exact_pair(x, f, C, 2 * j, oracle, profile, registry, rules, sample)
    logger.info(f"build_exact_pair: index {2 * j}, holds={pair.holds}, waived={pair.waived}")
    return pair


def coordinate_pair(index: int, start: int, profile: ParameterProfile, block: int = 1) -> Tuple[Vec00, Func]:
    """
    (x, f) with f = m_index^{-1} sum_{t in B} e_t* and x = (m_index/#B) sum_{t in B} e_t.

    f(x) = 1 and ran f = ran x hold exactly; the norm and sup clauses of an
    exact pair are left to measurement.
    """
    size = max(1, block)
    if not profile.n_at_least(index, size):
        size = profile.n(index)
    coordinates = range(start, start + size)
    f = operation(index, [Func.coordinate(t) for t in coordinates], profile)
    x = Vec00.indicator(coordinates, Fraction(profile.m(index), size))
    return x, f


@dataclass
class AttractingSequence:
    """
    Attributes:
        xs: x_1, ..., x_n
        fs: f_1, ..., f_n (an attractor sequence)
        indices: j_1 = ind(f_1) and j_k = 2 sigma(f_1, ..., f_{k-1})
        j: The attractor operation has index 2j - 1
        check: Replay of the attractor conditions
        in_l: Even coordinates drawn from L (quotient mode)
    """

    xs: List[Vec00]
    fs: List[Func]
    indices: List[int]
    j: int
    check: AttractorCheck
    in_l: Optional[bool] = None

    def to_json(self) -> dict:
        return {
            "j": self.j,
            "xs": [str(x) for x in self.xs],
            "fs": [str(f) for f in self.fs],
            "indices": self.indices,
            "check": self.check.describe(),
            "in_l": self.in_l,
        }


def build_attracting_sequence(j: int, start: int, profile: ParameterProfile, registry: CodingRegistry,
                              pair_source: Optional[PairSource] = None, length: Optional[int] = None,
                              in_l: Optional[bool] = None) -> AttractingSequence:
    """
    Grow an attracting sequence of length n_{2j-1} (or `length`).

    Args:
        j: The attractor operation has index 2j - 1
        start: First coordinate used
        pair_source: (index, start) -> (x, f) with f of type I and index `index`;
            defaults to coordinate_pair
        in_l: True draws the even coordinates from L, False from its complement

    Raises:
        PreconditionError: the grown functionals fail the attractor conditions
    """
    length = length or profile.n(2 * j - 1)
    if length < 1:
        raise PreconditionError("Attracting sequences are nonempty")
    if pair_source is None:
        def pair_source(index: int, first: int) -> Tuple[Vec00, Func]:
            return coordinate_pair(index, first, profile)
    j1 = least_first_index(j, profile)
    x1, f1 = pair_source(2 * j1, start)
    vectors: Dict[int, Vec00] = {1: x1}

    def odd_entry(index: int, prefix: Tuple[Func, ...]) -> Func:
        x, f = pair_source(index, prefix[-1].base.maxsupp + 1)
        vectors[len(prefix) + 1] = x
        return f

    def even_entry(coded: int, prefix: Tuple[Func, ...]) -> Func:
        point = first_lambda_after(coded, prefix[-1].base.maxsupp, in_l)
        vectors[len(prefix) + 1] = Vec00.unit(point)
        return Func.coordinate(point)

    fs = list(build_attractor_sequence(f1, length, j, registry, profile, odd_entry, even_entry))
    indices = [f1.index]
    for k in range(2, len(fs) + 1):
        coded = registry.sigma_lookup(fs[:k - 1])
        indices.append(2 * coded)
    check = check_attractor_sequence(fs, j, registry, profile)
    if not check:
        raise PreconditionError(f"Attracting sequence rejected: {check.describe()}")
    xs = [vectors[k] for k in range(1, len(fs) + 1)]
    logger.info(f"build_attracting_sequence: j={j}, length {len(fs)}, indices {indices}")
    return AttractingSequence(xs, fs, indices, j, check, in_l)


@dataclass
class AttractorEstimates:
    """
    Attributes:
        average: (1/n) sum (-1)^{k+1} x_k
        lower_witness: m^{-2} sum f_{2k}, a G1 element (equal to psi)
        lower: |lower_witness(average)| = 1/(2m^2) when the witness is certified
        upper: Oracle upper bound on ||average||
        upper_target: 15C/m^2
        phi_plus_psi: m (phi + psi) = m^{-1} sum f_i with phi = m^{-2} sum f_{2k-1} and
            psi = m^{-2} sum f_{2k}; the odd operation over the whole sequence
        sum_bound_member: m (phi + psi) replays in K, so ||phi + psi|| <= 1/m
        psi_lower: |psi(average)| / upper(||average||), a certified lower bound on ||psi||
        psi_target: 1/(30C)
        odd_ground_norms: Oracle upper bounds of ||x_{2k-1}||_G against m^{-2}
    """

    average: Vec00
    lower_witness: Func
    lower: Fraction
    lower_member: bool
    upper: Fraction
    upper_target: Fraction
    phi_plus_psi: Func
    sum_bound_member: bool
    psi_lower: Fraction
    psi_target: Fraction
    odd_ground_norms: List[Fraction]
    upper_waived: bool = False

    @property
    def upper_holds(self) -> bool:
        return self.upper <= self.upper_target

    @property
    def psi_holds(self) -> bool:
        return self.psi_lower >= self.psi_target

    def to_json(self) -> dict:
        return {
            "average": str(self.average),
            "lower": str(self.lower),
            "lower_member": self.lower_member,
            "upper": str(self.upper),
            "upper_target": str(self.upper_target),
            "upper_holds": self.upper_holds,
            "upper_waived": self.upper_waived,
            "sum_bound_member": self.sum_bound_member,
            "psi_lower": str(self.psi_lower),
            "psi_target": str(self.psi_target),
            "psi_holds": self.psi_holds,
            "odd_ground_norms": [str(v) for v in self.odd_ground_norms],
        }


def attractor_estimates(seq: AttractingSequence, oracle: Oracle, profile: ParameterProfile,
                        registry: CodingRegistry, C: Fraction = Fraction(3), xi=1) -> AttractorEstimates:
    """
    The two-sided estimate of the alternating average and the bounds on phi and psi.

    The lower bound 1/(2m^2) and the membership of m (phi + psi) are exact.
    The upper bound 15C/m^2 and psi >= 1/(30C) are measured through the oracle;
    profiles declaring the upper estimate unmet record them without asserting.
    """
    n = len(seq.xs)
    if n % 2:
        raise PreconditionError("Attracting sequence estimates need an even length")
    m = profile.m(2 * seq.j - 1)
    average = Vec00()
    for k, x in enumerate(seq.xs, start=1):
        average = average + x.scale(Fraction(1 if k % 2 else -1, n))
    even_points = [seq.fs[k].base.minsupp for k in range(1, n, 2)]
    psi = g1_leaf(seq.j, even_points, profile, [-1] * len(even_points))
    lower_member = bool(verify_membership(psi, RuleSet.ground_set(xi), profile, registry))
    lower = abs(psi(average))
    result = oracle(average)
    upper = result.upper.upper()
    combined = operation(2 * seq.j - 1, seq.fs, profile, odd=ATTRACTOR_ODD)
    sum_member = bool(verify_membership(combined, RuleSet.k_xi(xi), profile, registry))
    psi_lower = lower / upper if upper > 0 else Fraction(0)
    odd_norms = [norm_ground(seq.xs[k], profile, registry, xi).upper.upper() for k in range(0, n, 2)]
    estimates = AttractorEstimates(
        average, psi, lower, lower_member, upper, 15 * Fraction(C) / (m * m), combined, sum_member,
        psi_lower, 1 / (30 * Fraction(C)), odd_norms,
        upper_waived=profile.declares_unmet(UNMET_ATTRACTOR_UPPER),
    )
    if not estimates.upper_holds:
        level = logging.INFO if estimates.upper_waived else logging.WARNING
        logger.log(level, f"attractor_estimates: measured upper {float(upper):.4g} "
                          f"above 15C/m^2 = {float(estimates.upper_target):.4g}")
    return estimates

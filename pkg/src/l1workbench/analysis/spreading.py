"""
l1-spreading constants, l1 trees of special sequences, and the segment
measurements used to explore spreading models of X_{G_xi}.

For a normalized sequence (x_i) and F in S_xi,

    c_F = min { ||sum_{i in F} a_i x_i|| : sum |a_i| = 1 },

and (x_i)_{i in F} is C-equivalent to the l1^{#F} basis with C = 1/c_F.
spreading_constant brackets min_F c_F over a budget of sets F.
"""
import itertools
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import linprog
from tqdm import tqdm

from l1workbench.combinatorics.families import admissible, iter_restricted, member, schreier
from l1workbench.combinatorics.trees import FinTree, family_to_tree, tree_order
from l1workbench.norms.ground_norm import NormResult, norm_ground
from l1workbench.norms.values import Surd
from l1workbench.normsets.builders import special_leaf
from l1workbench.normsets.ground import Segment, build_special_sequence
from l1workbench.normsets.rules import RuleSet, verify_membership
from l1workbench.spaces.coding import CodingRegistry
from l1workbench.spaces.linspace import Func, Vec00
from l1workbench.spaces.profiles import ParameterProfile
from l1workbench.utils.errors import PreconditionError

logger = logging.getLogger(__name__)

Oracle = Callable[[Vec00], NormResult]

DEFAULT_RESTARTS = 64
DEFAULT_STEPS = 16
DEFAULT_TOLERANCE = 1e-4
THRESHOLD = Fraction(3, 4)
PRIMAL = "l1"
DUAL = "c0"


@dataclass
class SetBracket:
    F: Tuple[int, ...]
    lower: Surd
    upper: Fraction
    point: Tuple[Fraction, ...]


@dataclass
class SpreadingResult:
    """
    Attributes:
        lower: Certified lower bound on min_F c_F
        upper: Attained upper bound on min_F c_F
        brackets: One bracket per examined F
        exhausted: The budget ran out before every F in S_xi was examined
    """

    lower: Surd
    upper: Fraction
    brackets: List[SetBracket] = field(default_factory=list)
    exhausted: bool = False

    @property
    def worst(self) -> Optional[SetBracket]:
        return min(self.brackets, key=lambda b: b.upper, default=None)

    def constant_bounds(self) -> Tuple[Fraction, Optional[Fraction]]:
        """Bracket on the l1 constant C = 1/min_F c_F; None when no positive lower bound is known."""
        low = self.lower.lower()
        return 1 / self.upper, (1 / low if low > 0 else None)

    def to_json(self) -> dict:
        low, high = self.constant_bounds()
        return {
            "lower": str(self.lower),
            "upper": str(self.upper),
            "constant": [str(low), str(high) if high is not None else None],
            "sets": len(self.brackets),
            "worst": list(self.worst.F) if self.worst else None,
            "exhausted": self.exhausted,
        }


def _project_simplex(v: np.ndarray) -> np.ndarray:
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    rho = np.nonzero(u * np.arange(1, len(v) + 1) > css - 1)[0][-1]
    theta = (css[rho] - 1) / (rho + 1)
    return np.maximum(v - theta, 0)


def _rational_point(t: np.ndarray) -> Tuple[Fraction, ...]:
    values = [Fraction(float(v)).limit_denominator(10 ** 6) for v in t]
    total = sum(values, Fraction(0))
    if total <= 0:
        return tuple(Fraction(1, len(values)) for _ in values)
    return tuple(v / total for v in values)


def _combine(vectors: Sequence[Vec00], coefficients: Sequence[Fraction]) -> Vec00:
    total = Vec00()
    for x, a in zip(vectors, coefficients):
        total = total + x.scale(a)
    return total


def _certified_lower(columns: Sequence[Vec00], witnesses: List[Tuple[Func, Surd]]) -> Surd:
    """
    max over convex combinations of norming functionals of min_i sum_g lambda_g g(column_i).

    The LP only proposes lambda; the bound is recomputed exactly for the
    rationalized lambda, so it is certified whatever the LP accuracy.
    """
    if not witnesses:
        return Surd()
    values = [[Surd.of(g(x)) * scale for x in columns] for g, scale in witnesses]
    values += [[-v for v in row] for row in values]
    count = len(values)
    matrix = np.array([[float(v) for v in row] for row in values])
    objective = np.zeros(count + 1)
    objective[-1] = -1.0
    A_ub = np.hstack([-matrix.T, np.ones((len(columns), 1))])
    A_eq = np.hstack([np.ones((1, count)), np.zeros((1, 1))])
    result = linprog(objective, A_ub=A_ub, b_ub=np.zeros(len(columns)), A_eq=A_eq, b_eq=np.ones(1),
                     bounds=[(0, None)] * count + [(None, None)], method="highs")
    if not result.success:
        logger.warning(f"spreading: LP failed: {result.message}")
        return Surd()
    weights = [max(Fraction(0), Fraction(float(v)).limit_denominator(10 ** 6)) for v in result.x[:count]]
    total = sum(weights, Fraction(0))
    if total == 0:
        return Surd()
    weights = [w / total for w in weights]
    best = None
    for i in range(len(columns)):
        value = Surd()
        for w, row in zip(weights, values):
            if w:
                value = value + row[i] * w
        best = value if best is None or value < best else best
    return best if best is not None and best > 0 else Surd()


def set_bracket(vectors: Sequence[Vec00], oracle: Oracle, rng: np.random.Generator,
                restarts: int = DEFAULT_RESTARTS, steps: int = DEFAULT_STEPS,
                tolerance: float = DEFAULT_TOLERANCE, F: Tuple[int, ...] = ()) -> SetBracket:
    """Bracket c_F for one F by projected subgradient descent on each sign orthant."""
    d = len(vectors)
    cache: Dict[str, NormResult] = {}

    def evaluate(y: Vec00) -> NormResult:
        key = str(y)
        if key not in cache:
            cache[key] = oracle(y)
        return cache[key]

    best_upper, best_point = None, None
    lower = None
    orthants = [(1,) + rest for rest in itertools.product((1, -1), repeat=d - 1)]
    per_orthant = max(1, restarts // len(orthants))
    for signs in orthants:
        columns = [x.scale(s) for x, s in zip(vectors, signs)]
        witnesses: List[Tuple[Func, Surd]] = []
        seen = set()
        starts = [np.full(d, 1.0 / d)] + [rng.dirichlet(np.ones(d)) for _ in range(per_orthant - 1)]
        for t in starts:
            for step in range(steps):
                point = _rational_point(t)
                result = evaluate(_combine(columns, point))
                upper = result.upper.upper()
                if best_upper is None or upper < best_upper:
                    best_upper = upper
                    best_point = tuple(a * s for a, s in zip(point, signs))
                g = result.witness
                if g is None:
                    break
                if str(g.base) not in seen:
                    seen.add(str(g.base))
                    witnesses.append((g, result.witness_scale))
                gradient = np.array([float(Surd.of(g(x)) * result.witness_scale) for x in columns])
                moved = _project_simplex(t - gradient / (2 * (step + 1)))
                if np.abs(moved - t).max() < tolerance:
                    break
                t = moved
        bound = _certified_lower(columns, witnesses)
        lower = bound if lower is None or bound < lower else lower
    return SetBracket(F, lower, best_upper, best_point)


def spreading_constant(xs: Sequence[Vec00], xi, min_start: int, oracle: Oracle, budget: int = 200,
                       restarts: int = DEFAULT_RESTARTS, steps: int = DEFAULT_STEPS,
                       tolerance: float = DEFAULT_TOLERANCE, seed: int = 0,
                       progress: bool = False) -> SpreadingResult:
    """
    Bracket min_F c_F over F in S_xi, F inside {min_start, ..., len(xs)}, #F >= 2.

    Args:
        xs: Normalized vectors, x_i at position i (1-based)
        xi: Schreier order
        min_start: Least admissible min F
        oracle: Norm oracle with witnesses
        budget: Number of sets F examined
        restarts: Starting points per F, spread over the sign orthants
        steps: Subgradient steps per start
        progress: Show a tqdm bar over the sets

    Returns:
        SpreadingResult; `exhausted` marks a truncated search
    """
    xs = list(xs)
    if not xs:
        raise PreconditionError("spreading_constant needs vectors")
    rng = np.random.default_rng(seed)
    spec = schreier(xi)
    candidates = (F for F in iter_restricted(spec, len(xs)) if len(F) >= 2 and F[0] >= min_start)
    brackets: List[SetBracket] = []
    exhausted = False
    bar = tqdm(total=budget, desc="spreading", disable=not progress)
    for F in candidates:
        if len(brackets) >= budget:
            exhausted = True
            break
        vectors = [xs[i - 1] for i in F]
        brackets.append(set_bracket(vectors, oracle, rng, restarts, steps, tolerance, F))
        bar.update(1)
    bar.close()
    if not brackets:
        raise PreconditionError(f"No F in S({xi}) with #F >= 2 and min F >= {min_start} inside 1..{len(xs)}")
    lower = min((b.lower for b in brackets))
    upper = min(b.upper for b in brackets)
    if exhausted:
        logger.warning(f"spreading_constant: budget of {budget} sets exhausted")
    logger.info(f"spreading_constant: min c_F in [{float(lower):.6g}, {float(upper):.6g}] over {len(brackets)} sets")
    return SpreadingResult(lower, upper, brackets, exhausted)


@dataclass
class TreeNode:
    """
    Attributes:
        F: The S_xi set of minima
        functionals: The special sequence f_1 < ... < f_d
        vectors: x_i = (m_{2j_i-1}^2 / #supp f_i) sum_{k in supp f_i} e_k, so f_i(x_i) = 1
        member: The special functional replays in the ground set
        lower: Primal mode: min over the trial coefficients of g(sum a_i x_i) / sum |a_i|;
            dual mode: max_i 1/upper(||x_i||)
        upper: Dual mode: 1 (certified by membership)
    """

    F: Tuple[int, ...]
    functionals: Tuple[Func, ...]
    vectors: Tuple[Vec00, ...]
    member: bool
    lower: Fraction
    upper: Optional[Fraction] = None


@dataclass
class L1Tree:
    mode: str
    nodes: List[TreeNode]
    tree: FinTree
    order: int
    truncated: bool = False

    @property
    def admissible(self) -> bool:
        return all(n.member for n in self.nodes)

    def to_json(self) -> dict:
        return {
            "mode": self.mode,
            "nodes": [{"F": list(n.F), "member": n.member, "lower": str(n.lower),
                       "upper": str(n.upper) if n.upper is not None else None} for n in self.nodes],
            "order": self.order,
            "truncated": self.truncated,
        }


def _members_on(spec, indices: Sequence[int], budget: int) -> Tuple[List[Tuple[int, ...]], bool]:
    found: List[Tuple[int, ...]] = []
    truncated = False

    def extend(current: Tuple[int, ...], position: int):
        nonlocal truncated
        for p in range(position, len(indices)):
            if len(found) >= budget:
                truncated = True
                return
            candidate = current + (indices[p],)
            if member(spec, candidate):
                found.append(candidate)
                extend(candidate, p + 1)

    extend((), 0)
    return found, truncated


def _supports(F: Sequence[int], width: int) -> List[List[int]]:
    supports = []
    for r, p in enumerate(F):
        gap = F[r + 1] - p if r + 1 < len(F) else width
        supports.append(list(range(p, p + min(gap, width))))
    return supports


PATTERNS = ("ones", "alternating")


def _pattern(d: int, name: str) -> List[Fraction]:
    if name == "ones":
        return [Fraction(1)] * d
    return [Fraction(1 if r % 2 == 0 else -1, r + 1) for r in range(d)]


def build_l1_tree(indices: Sequence[int], xi, mode: str, registry: CodingRegistry, profile: ParameterProfile,
                  budget: int = 500, oracle: Optional[Oracle] = None) -> L1Tree:
    """
    The l1 tree (primal) or its c0 dual over the S_xi sets drawn from `indices`.

    Every set F yields a special sequence f_1 < ... < f_d with minsupp f_r = F_r,
    each supported on at most n_1 coordinates before the next minimum. Primal
    mode witnesses ||sum a_r x_r|| >= sum |a_r| through the special functional
    sum sign(a_r) f_r; dual mode witnesses 1/2 <= ||sum +-f_r|| <= 1 when the
    x_r have norm at most 2 (measured through the oracle).

    Raises:
        PreconditionError: unknown mode or indices not increasing
    """
    if mode not in (PRIMAL, DUAL):
        raise PreconditionError(f"Unknown tree mode '{mode}'")
    indices = list(indices)
    if any(a >= b for a, b in zip(indices, indices[1:])) or not indices or indices[0] < 1:
        raise PreconditionError("Tree indices must be strictly increasing naturals")
    spec = schreier(xi)
    family, truncated = _members_on(spec, indices, budget)
    if oracle is None:
        def oracle(x: Vec00) -> NormResult:
            return norm_ground(x, profile, registry, xi)
    ground = RuleSet.ground_set(xi)
    width = profile.n(1)
    nodes: List[TreeNode] = []
    for F in family:
        supports = _supports(F, width)
        seq = build_special_sequence(supports, xi, registry, profile)
        vectors = tuple(Vec00.indicator(s, Fraction(f.weight, len(s))) for s, f in zip(supports, seq))
        if not admissible(spec, seq):
            raise PreconditionError(f"Supports over {F} are not S({xi})-admissible")
        if mode == PRIMAL:
            lower, member_ok = Fraction(1), True
            for name in PATTERNS:
                a = _pattern(len(F), name)
                signs = [1 if v > 0 else -1 for v in a]
                g = special_leaf(seq, signs)
                member_ok = member_ok and bool(verify_membership(g, ground, profile, registry))
                total = _combine(vectors, a)
                lower = min(lower, g(total) / sum(abs(v) for v in a))
            nodes.append(TreeNode(F, seq, vectors, member_ok, lower))
        else:
            signs = [1 if r % 2 == 0 else -1 for r in range(len(F))]
            g = special_leaf(seq, signs)
            member_ok = bool(verify_membership(g, ground, profile, registry))
            lower = max(Fraction(1) / oracle(x).upper.upper() for x in vectors)
            nodes.append(TreeNode(F, seq, vectors, member_ok, lower, Fraction(1) if member_ok else None))
    tree = family_to_tree(family) if family else FinTree(frozenset())
    order = tree_order(tree)
    if truncated:
        logger.warning(f"build_l1_tree: budget of {budget} sets reached, tree truncated")
    logger.info(f"build_l1_tree[{mode}]: {len(nodes)} nodes, order {order}")
    return L1Tree(mode, nodes, tree, order, truncated)


@dataclass
class SegmentSplit:
    """
    A Gl2 functional sum c_s phi_s split at the indices j0 < j1.

    Attributes:
        far: Segments whose index set avoids {1..j0}
        low: Remaining segments whose first node meeting ran x_n has index <= j1
        small_n: Remaining segments with that node acting by at most delta on x_n
        small_k: The rest
        low_value: |sum_{s in low} c_s phi_s(x_k)|
    """

    far: List[int]
    low: List[int]
    small_n: List[int]
    small_k: List[int]
    low_value: Fraction

    @property
    def threshold_met(self) -> bool:
        return self.low_value >= THRESHOLD

    @property
    def chosen(self) -> List[int]:
        return self.low if self.threshold_met else (self.small_n or self.small_k)


def _first_meeting(segment: Segment, x: Vec00) -> Optional[Func]:
    for f in segment.functionals:
        if f.base.minsupp <= x.maxsupp and x.minsupp <= f.base.maxsupp:
            return f
    return None


def segment_split(parts: Sequence[Tuple[Fraction, Segment, Sequence[int]]], j0: int, j1: int,
                  x_k: Vec00, x_n: Vec00, delta: Fraction) -> SegmentSplit:
    """
    Partition the segments of phi = sum c_s phi_s as in the spreading-model argument.

    Args:
        parts: (c_s, segment, signs) with phi_s the signed sum of the segment
        j0: Segments with index sets beyond j0 are far
        j1: Index split for the first node meeting ran x_n
        x_k, x_n: The two vectors tested
        delta: Action threshold on the first meeting node
    """
    far, low, small_n, small_k = [], [], [], []
    for position, (_, segment, _) in enumerate(parts):
        if min(segment.index_set) > j0:
            far.append(position)
            continue
        node = _first_meeting(segment, x_n)
        if node is None or node.index <= j1:
            low.append(position)
        elif abs(node(x_n)) <= delta:
            small_n.append(position)
        else:
            small_k.append(position)
    value = Fraction(0)
    for position in low:
        c, segment, signs = parts[position]
        value += c * segment.functional(signs)(x_k)
    return SegmentSplit(far, low, small_n, small_k, abs(value))


def segment_family(splits: Sequence[Tuple[SegmentSplit, Sequence[Tuple[Fraction, Segment, Sequence[int]]]]]
                   ) -> List[Segment]:
    """The family U_n: the chosen segments of every split, without repetitions."""
    family: List[Segment] = []
    keys = set()
    for split, parts in splits:
        for position in split.chosen:
            segment = parts[position][1]
            key = tuple(str(f.base) for f in segment.functionals)
            if key not in keys:
                keys.add(key)
                family.append(segment)
    return family


def family_reaches(family: Sequence[Segment], xs: Sequence[Vec00], delta: Fraction) -> List[bool]:
    """For every x_k: some sign sum of some segment of the family acts by at least delta."""
    return [any(segment.best_value(x) >= delta for segment in family) for x in xs]

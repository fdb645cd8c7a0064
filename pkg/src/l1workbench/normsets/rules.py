"""
Rule sets of the norming sets and certificate replay.

A RuleSet describes a minimal closure: a ground layer, the admitted
(A_n, 1/m)-operations, the odd-operation policy, l2-combinations and rational
convex combinations. Membership is never searched for: a functional comes with
its tree analysis and verify_membership replays it bottom-up.
"""
import json
import logging
from dataclasses import dataclass, replace
from enum import Enum
from fractions import Fraction
from typing import List, Optional, Tuple

from l1workbench.combinatorics.ordinal import Ordinal, parse_ordinal
from l1workbench.normsets.attractors import check_attractor_sequence, check_hi_special_sequence
from l1workbench.normsets.ground import (
    check_special_sequence,
    is_g1,
    special_functional,
)
from l1workbench.spaces.coding import CodingRegistry
from l1workbench.spaces.linspace import (
    GROUND_KINDS,
    AnalysisNode,
    Func,
    FuncTag,
    GroundWitness,
    Interval,
    Rule,
    TagKind,
    Vec00,
    canonical_serialize,
    parse_func,
    restrict,
)
from l1workbench.spaces.profiles import ParameterProfile
from l1workbench.utils.errors import MembershipError, ParseError, PreconditionError

logger = logging.getLogger(__name__)


class GroundLayer(str, Enum):
    G_XI = "G"
    UNIT = "unit"
    C_J0 = "C"


class OddPolicy(str, Enum):
    ATTRACTORS = "attractors"
    SPECIAL_SEQUENCES = "special_sequences"
    NONE = "none"


@dataclass(frozen=True)
class RuleSet:
    """
    Attributes:
        name: Short name used in certificates and on the command line
        ground: Ground layer of the closure
        xi: Schreier order of the ground set G_xi
        j0: Index of the auxiliary set W_j0
        even_only: Only operations (A_{n_j}, 1/m_j) with even j outside odd_policy
        admissibility_factor: Operation (A_{factor * n_j}, 1/m_j)
        odd_policy: Which sequences odd operations may act on
        l2_combos: Closure under l2-combinations of distinct-weight type I functionals
        fresh_coordinates: l2-combinations may add sum mu_t e_t* over distinct t
        rational_convex: Closure under rational convex combinations
        operations: Closure under any (A_n, 1/m)-operation at all
    """

    name: str
    ground: GroundLayer
    xi: Ordinal = Ordinal.of(1)
    j0: Optional[int] = None
    even_only: bool = True
    admissibility_factor: int = 1
    odd_policy: OddPolicy = OddPolicy.NONE
    l2_combos: bool = True
    fresh_coordinates: bool = False
    rational_convex: bool = True
    operations: bool = True

    @classmethod
    def ground_set(cls, xi=1) -> "RuleSet":
        return cls("G", GroundLayer.G_XI, Ordinal.of(xi), l2_combos=False, rational_convex=False,
                   operations=False)

    @classmethod
    def k_xi(cls, xi=1) -> "RuleSet":
        return cls("K", GroundLayer.G_XI, Ordinal.of(xi), odd_policy=OddPolicy.ATTRACTORS)

    @classmethod
    def w(cls, j0: int, convex: bool = True) -> "RuleSet":
        if j0 < 2:
            raise PreconditionError(f"W_j0 needs j0 > 1, got {j0}")
        return cls(f"W:{j0}" if convex else f"W':{j0}", GroundLayer.C_J0, j0=j0, even_only=False,
                   admissibility_factor=2, fresh_coordinates=True, rational_convex=convex)

    @classmethod
    def k_hi(cls) -> "RuleSet":
        return cls("HI", GroundLayer.UNIT, odd_policy=OddPolicy.SPECIAL_SEQUENCES)

    @classmethod
    def extension(cls, ground: GroundLayer = GroundLayer.G_XI, xi=1) -> "RuleSet":
        """An extension D_G: even operations, l2-combinations, convexity; no odd operations."""
        return cls(f"D:{ground.value}", ground, Ordinal.of(xi))

    @classmethod
    def enclosing(cls, ground: GroundLayer = GroundLayer.G_XI, xi=1) -> "RuleSet":
        """The enclosing set W_G: every (A_{n_j}, 1/m_j) operation."""
        return cls(f"WG:{ground.value}", ground, Ordinal.of(xi), even_only=False)

    def admissibility(self, j: int, profile: ParameterProfile) -> int:
        return self.admissibility_factor * profile.n(j)

    def allows_operation(self, j: int) -> bool:
        if not self.operations:
            return False
        return not self.even_only or j % 2 == 0

    def __str__(self):
        return self.name


def parse_rules(text: str, xi=1) -> RuleSet:
    """Rule-set names used on the command line: G, K, W:j0, W':j0, HI, D, WG."""
    text = text.strip()
    if isinstance(xi, str):
        xi = parse_ordinal(xi)
    if text == "G":
        return RuleSet.ground_set(xi)
    if text == "K":
        return RuleSet.k_xi(xi)
    if text == "HI":
        return RuleSet.k_hi()
    if text in ("D", "D:G"):
        return RuleSet.extension(GroundLayer.G_XI, xi)
    if text in ("WG", "WG:G"):
        return RuleSet.enclosing(GroundLayer.G_XI, xi)
    for prefix, convex in (("W:", True), ("W':", False)):
        if text.startswith(prefix):
            try:
                return RuleSet.w(int(text[len(prefix):]), convex)
            except ValueError:
                raise ParseError(f"Invalid j0 in rule set '{text}'")
    raise ParseError(f"Unknown rule set '{text}' (expected G, K, W:j0, W':j0, HI, D or WG)")


@dataclass(frozen=True)
class MembershipCertificate:
    functional: Func
    analysis: AnalysisNode
    rules: str

    def to_json(self) -> dict:
        return {
            "functional": canonical_serialize(Func(self.functional.base, self.functional.tag)),
            "rules": self.rules,
            "analysis": self.analysis.to_json(),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))


def certificate_for(f: Func, rules: RuleSet) -> MembershipCertificate:
    if f.analysis is None:
        raise PreconditionError("Functional carries no tree analysis")
    return MembershipCertificate(f, f.analysis, rules.name)


def _window_from_json(data) -> Optional[Interval]:
    if data is None:
        return None
    return Interval(data[0], data[1])


def _witness_from_json(data: dict) -> GroundWitness:
    return GroundWitness(
        TagKind(data["kind"]),
        sequence=tuple(parse_func(s) for s in data.get("sequence", [])),
        signs=tuple(data.get("signs", [])),
        window=_window_from_json(data.get("window")),
        parts=tuple(_witness_from_json(p) for p in data.get("parts", [])),
        part_functionals=tuple(parse_func(s) for s in data.get("part_functionals", [])),
        coefficients=tuple(Fraction(c) for c in data.get("coefficients", [])),
    )


def analysis_from_json(data: dict) -> AnalysisNode:
    try:
        children = tuple(analysis_from_json(c) for c in data.get("children", []))
        node = AnalysisNode(
            functional=parse_func(data["functional"]),
            rule=Rule(data["rule"]),
            j=data.get("j"),
            coeffs=tuple(Fraction(c) for c in data.get("coeffs", [])),
            children=children,
            fresh=tuple((int(t), Fraction(mu)) for t, mu in data.get("fresh", [])),
            window=_window_from_json(data.get("window")),
            ground=_witness_from_json(data["ground"]) if "ground" in data else None,
            odd=data.get("odd"),
        )
    except (KeyError, ValueError, TypeError) as e:
        raise ParseError(f"Malformed analysis node: {e}")
    return node


def certificate_from_json(data: dict) -> MembershipCertificate:
    analysis = analysis_from_json(data["analysis"])
    functional = parse_func(data["functional"]).with_analysis(analysis)
    return MembershipCertificate(functional, analysis, data.get("rules", ""))


@dataclass(frozen=True)
class MembershipResult:
    ok: bool
    node: str = ""
    rule: Optional[Rule] = None
    reason: str = ""

    def __bool__(self):
        return self.ok


@dataclass
class _Replay:
    rules: RuleSet
    profile: ParameterProfile
    registry: Optional[CodingRegistry]

    def fail(self, path: str, node: AnalysisNode, message: str):
        raise MembershipError(f"{node.rule.value} node {path}: {message}", node=path)

    def node(self, node: AnalysisNode, path: str) -> Tuple[TagKind, Optional[int]]:
        """Replay one node; returns its type and weight."""
        for position, child in enumerate(node.children):
            self.node(child, f"{path}/{position}")
        if node.rule == Rule.GROUND_LEAF:
            composed = self.ground(node, path)
            kind, weight = node.functional.kind, node.functional.weight
        elif node.rule == Rule.OP_J:
            composed = self.operation(node, path)
            kind, weight = TagKind.TYPE_I, self.profile.m(node.j)
        elif node.rule == Rule.L2_COMBO:
            composed = self.l2(node, path)
            kind, weight = TagKind.TYPE_II, None
        else:
            composed = self.convex(node, path)
            kind, weight = TagKind.TYPE_III, None
        if node.window is not None:
            composed = composed.restrict(node.window)
        if composed != node.functional.base:
            self.fail(path, node, "functional differs from the composition of its children")
        if node.rule != Rule.GROUND_LEAF:
            tag = node.functional.tag
            if tag.kind != kind or (kind == TagKind.TYPE_I and (tag.index != node.j or tag.weight != weight)):
                self.fail(path, node, f"tag {tag} does not match the rule")
        return kind, weight

    def ground(self, node: AnalysisNode, path: str) -> Vec00:
        f = node.functional
        layer = self.rules.ground
        base = f.base
        if f.kind not in GROUND_KINDS:
            self.fail(path, node, f"leaf of kind {f.kind.value} is not a ground element")
        if layer == GroundLayer.UNIT:
            if f.kind != TagKind.G0 or len(base) != 1 or abs(base.entries[0][1]) != 1:
                self.fail(path, node, "leaf is not +-e_n*")
            return base
        if layer == GroundLayer.C_J0:
            if f.kind not in (TagKind.C, TagKind.G0) or base.is_zero or any(abs(v) != 1 for _, v in base):
                self.fail(path, node, "leaf is not a sum of +-e_i*")
            if len(base) > self.profile.n(self.rules.j0 - 1):
                self.fail(path, node, f"C_j0 leaf has more than n_{self.rules.j0 - 1} coordinates")
            return base
        return self.g_xi(f, node.ground, node, path)

    def g_xi(self, f: Func, witness: Optional[GroundWitness], node: AnalysisNode, path: str) -> Vec00:
        if f.kind == TagKind.G0:
            if len(f.base) != 1 or abs(f.base.entries[0][1]) != 1:
                self.fail(path, node, "G0 leaf is not +-e_n*")
            return f.base
        if f.kind == TagKind.G1:
            if not is_g1(f, self.profile):
                self.fail(path, node, "G1 leaf has the wrong coefficients or size")
            return f.base
        if witness is None or witness.kind != f.kind:
            self.fail(path, node, f"{f.kind.value} leaf needs a matching ground witness")
        return self.witness_value(witness, node, path)

    def witness_value(self, witness: GroundWitness, node: AnalysisNode, path: str) -> Vec00:
        if witness.kind == TagKind.GSP:
            if self.registry is None:
                self.fail(path, node, "Gsp leaves need a coding registry")
            check = check_special_sequence(witness.sequence, self.rules.xi, self.registry, self.profile)
            if not check:
                self.fail(path, node, f"special sequence rejected: {check.describe()}")
            return special_functional(witness.sequence, witness.signs, witness.window).base
        if witness.kind == TagKind.GL2:
            if len(witness.parts) != len(witness.coefficients) or len(witness.parts) != len(witness.part_functionals):
                self.fail(path, node, "Gl2 witness is incomplete")
            if sum(a * a for a in witness.coefficients) > 1:
                self.fail(path, node, "Gl2 coefficients exceed the l2 unit ball")
            seen: set = set()
            total = Vec00()
            for part, phi, a in zip(witness.parts, witness.part_functionals, witness.coefficients):
                if phi.kind == TagKind.G1:
                    if not is_g1(phi, self.profile):
                        self.fail(path, node, "Gl2 part is not a G1 element")
                    value = phi.base
                elif phi.kind == TagKind.GSP:
                    value = self.witness_value(part, node, path)
                    if value != phi.base:
                        self.fail(path, node, "Gl2 part differs from its special witness")
                else:
                    self.fail(path, node, f"Gl2 part of kind {phi.kind.value}")
                indices = phi.tag.index_set
                if indices & seen:
                    self.fail(path, node, "Gl2 parts have overlapping index sets")
                seen |= indices
                total = total + value.scale(a)
            return total
        self.fail(path, node, f"no ground witness replay for kind {witness.kind.value}")

    def operation(self, node: AnalysisNode, path: str) -> Vec00:
        j = node.j
        if j is None or j < 1:
            self.fail(path, node, "operation without an index")
        children = [c.functional for c in node.children]
        if not children or any(c.is_zero for c in children):
            self.fail(path, node, "operation needs nonzero children")
        for f, g in zip(children, children[1:]):
            if f.base.maxsupp >= g.base.minsupp:
                self.fail(path, node, "children are not successive")
        if node.odd is not None or (self.rules.even_only and j % 2 == 1):
            self.odd_operation(node, path, children)
        elif not self.rules.allows_operation(j):
            self.fail(path, node, f"operation of index {j} not in {self.rules}")
        elif len(children) > self.rules.admissibility(j, self.profile):
            self.fail(path, node, f"{len(children)} children exceed the admissibility of index {j}")
        total = Vec00()
        for child in children:
            total = total + child.base
        return total.scale(Fraction(1, self.profile.m(j)))

    def odd_operation(self, node: AnalysisNode, path: str, children: List[Func]):
        policy = self.rules.odd_policy
        if policy == OddPolicy.NONE or node.j % 2 == 0:
            self.fail(path, node, f"odd operation not allowed in {self.rules}")
        if self.registry is None:
            self.fail(path, node, "odd operations need a coding registry")
        j = (node.j + 1) // 2
        checker = check_attractor_sequence if policy == OddPolicy.ATTRACTORS else check_hi_special_sequence
        check = checker(children, j, self.registry, self.profile)
        if not check:
            # the norming set is symmetric: -f for f an odd operation result
            negated = checker([-c for c in children], j, self.registry, self.profile)
            check = negated if negated else check
        if not check:
            self.fail(path, node, f"{policy.value} check failed: {check.describe()}")

    def l2(self, node: AnalysisNode, path: str) -> Vec00:
        if not self.rules.l2_combos:
            self.fail(path, node, f"l2-combinations not allowed in {self.rules}")
        if node.fresh and not self.rules.fresh_coordinates:
            self.fail(path, node, f"fresh coordinates not allowed in {self.rules}")
        if len(node.coeffs) != len(node.children):
            self.fail(path, node, "one coefficient per child required")
        weights = []
        for child in node.children:
            if child.rule != Rule.OP_J:
                self.fail(path, node, "l2-combination children must be type I")
            weights.append(child.j)
        if len(set(weights)) != len(weights):
            self.fail(path, node, "l2-combination children need distinct weights")
        points = [t for t, _ in node.fresh]
        if len(set(points)) != len(points):
            self.fail(path, node, "fresh coordinates must be distinct")
        square = sum(c * c for c in node.coeffs) + sum(mu * mu for _, mu in node.fresh)
        if square > 1:
            self.fail(path, node, f"sum of squared coefficients {square} exceeds 1")
        total = Vec00()
        for child, c in zip(node.children, node.coeffs):
            total = total + child.functional.base.scale(c)
        for t, mu in node.fresh:
            total = total + Vec00.unit(t, mu)
        return total

    def convex(self, node: AnalysisNode, path: str) -> Vec00:
        if not self.rules.rational_convex:
            self.fail(path, node, f"convex combinations not allowed in {self.rules}")
        if len(node.coeffs) != len(node.children) or not node.children:
            self.fail(path, node, "one coefficient per child required")
        if any(c < 0 for c in node.coeffs) or sum(node.coeffs) != 1:
            self.fail(path, node, "convex coefficients must be nonnegative and sum to 1")
        total = Vec00()
        for child, c in zip(node.children, node.coeffs):
            total = total + child.functional.base.scale(c)
        span = total.range
        for child in node.children:
            if not child.functional.is_zero and (child.functional.base.minsupp < span.lo
                                                 or child.functional.base.maxsupp > span.hi):
                self.fail(path, node, "child range exceeds the range of the combination")
        return total


def verify_membership(f: Func, rules: RuleSet, profile: ParameterProfile,
                      registry: Optional[CodingRegistry] = None,
                      cert: Optional[MembershipCertificate] = None) -> MembershipResult:
    """
    Replay a tree analysis under a rule set.

    Args:
        f: Claimed member
        rules: Rule set of the norming set
        profile: Parameter profile fixing weights and admissibility
        registry: Coding registry for special, attractor and HI sequences
        cert: Certificate; defaults to the analysis carried by f

    Returns:
        MembershipResult naming the first failing node and its rule
    """
    analysis = cert.analysis if cert is not None else f.analysis
    if analysis is None:
        return MembershipResult(False, "", None, "no tree analysis supplied")
    replay = _Replay(rules, profile, registry)
    try:
        if analysis.functional.base != f.base:
            raise MembershipError("root of the analysis is not the claimed functional", node="root")
        replay.node(analysis, "root")
    except MembershipError as e:
        logger.debug(f"Membership replay failed: {e}")
        failing = _find(analysis, e.node)
        return MembershipResult(False, e.node, failing.rule if failing else None, str(e))
    return MembershipResult(True)


def _find(node: AnalysisNode, path: str) -> Optional[AnalysisNode]:
    parts = path.split("/")[1:]
    for part in parts:
        try:
            node = node.children[int(part)]
        except (ValueError, IndexError):
            return None
    return node


def leaf(f: Func, witness: Optional[GroundWitness] = None) -> Func:
    """Attach a ground-leaf analysis."""
    return f.with_analysis(AnalysisNode(f, Rule.GROUND_LEAF, ground=witness))


def negate(f: Func) -> Func:
    """-f with the negated tree analysis."""
    if f.analysis is None:
        return -f
    node = _negate_func(f.analysis)
    return node.functional.with_analysis(node)


def _negate_witness(witness: Optional[GroundWitness]) -> Optional[GroundWitness]:
    if witness is None:
        return None
    if witness.kind == TagKind.GSP:
        return replace(witness, signs=tuple(-s for s in witness.signs))
    if witness.kind == TagKind.GL2:
        return replace(witness, coefficients=tuple(-a for a in witness.coefficients))
    return witness


def _negate_func(node: AnalysisNode) -> AnalysisNode:
    f = Func(-node.functional.base, node.functional.tag)
    if node.rule == Rule.GROUND_LEAF:
        return replace(node, functional=f, ground=_negate_witness(node.ground))
    if node.rule == Rule.OP_J:
        return replace(node, functional=f, children=tuple(_negate_func(c) for c in node.children))
    if node.rule == Rule.L2_COMBO:
        return replace(node, functional=f, coeffs=tuple(-c for c in node.coeffs),
                       fresh=tuple((t, -mu) for t, mu in node.fresh))
    return replace(node, functional=f, children=tuple(_negate_func(c) for c in node.children))


def restrict_certified(f: Func, E: Interval) -> Func:
    """
    Ef with the induced tree analysis: the window of the root is narrowed.

    Ground leaves are restricted in place (their witness carries the window).
    """
    if f.analysis is None:
        return restrict(f, E)
    node = f.analysis
    g = restrict(f, E)
    if node.rule == Rule.GROUND_LEAF:
        witness = node.ground
        if witness is not None and witness.kind == TagKind.GSP:
            window = witness.window.intersect(E) if witness.window is not None else E
            witness = replace(witness, window=window)
        elif witness is not None and witness.kind == TagKind.GL2:
            witness = _restrict_l2_witness(witness, E)
        return g.with_analysis(AnalysisNode(g, Rule.GROUND_LEAF, ground=witness))
    window = node.window.intersect(E) if node.window is not None else E
    return g.with_analysis(replace(node, functional=g, window=window))


def _restrict_l2_witness(witness: GroundWitness, E: Interval) -> GroundWitness:
    parts, functionals, coefficients = [], [], []
    for part, phi, a in zip(witness.parts, witness.part_functionals, witness.coefficients):
        piece = restrict(phi, E)
        if piece.is_zero:
            continue
        if part.kind == TagKind.GSP:
            window = part.window.intersect(E) if part.window is not None else E
            part = replace(part, window=window)
        parts.append(part)
        functionals.append(piece)
        coefficients.append(a)
    return replace(witness, parts=tuple(parts), part_functionals=tuple(functionals),
                   coefficients=tuple(coefficients))


def operation(j: int, children: List[Func], profile: ParameterProfile,
              odd: Optional[str] = None) -> Func:
    """The (A_n, 1/m_j)-operation on successive children, with its analysis node."""
    total = Vec00()
    for child in children:
        total = total + child.base
    base = total.scale(Fraction(1, profile.m(j)))
    f = Func(base, FuncTag(TagKind.TYPE_I, index=j, weight=profile.m(j)))
    node = AnalysisNode(f, Rule.OP_J, j=j, children=tuple(_node_of(c) for c in children), odd=odd)
    return f.with_analysis(node)


def l2_combination(children: List[Func], coeffs: List[Fraction],
                   fresh: Tuple[Tuple[int, Fraction], ...] = ()) -> Func:
    total = Vec00()
    for child, c in zip(children, coeffs):
        total = total + child.base.scale(c)
    for t, mu in fresh:
        total = total + Vec00.unit(t, mu)
    f = Func(total, FuncTag(TagKind.TYPE_II))
    node = AnalysisNode(f, Rule.L2_COMBO, coeffs=tuple(Fraction(c) for c in coeffs),
                        children=tuple(_node_of(c) for c in children),
                        fresh=tuple((t, Fraction(mu)) for t, mu in fresh))
    return f.with_analysis(node)


def convex_combination(children: List[Func], coeffs: List[Fraction]) -> Func:
    total = Vec00()
    for child, c in zip(children, coeffs):
        total = total + child.base.scale(c)
    f = Func(total, FuncTag(TagKind.TYPE_III))
    node = AnalysisNode(f, Rule.RATIONAL_CONVEX, coeffs=tuple(Fraction(c) for c in coeffs),
                        children=tuple(_node_of(c) for c in children))
    return f.with_analysis(node)


def _node_of(f: Func) -> AnalysisNode:
    if f.analysis is not None:
        return f.analysis
    return AnalysisNode(f, Rule.GROUND_LEAF)

"""
Finitely supported exact-rational vectors and functionals.

Coordinates are 1-based. Functionals carry a tag (kind, index, weight) and,
optionally, the analysis tree that certifies how they were produced.
"""
import hashlib
import json
import logging
import re
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Tuple, Union

from l1workbench.utils.errors import ParseError, PreconditionError

logger = logging.getLogger(__name__)

Rational = Union[int, Fraction]
Entry = Tuple[int, Fraction]


@dataclass(frozen=True)
class Interval:
    """Interval [lo, hi] of N; hi=None means unbounded above."""

    lo: int = 1
    hi: Optional[int] = None

    def __post_init__(self):
        if self.lo < 1 or (self.hi is not None and self.hi < self.lo - 1):
            raise PreconditionError(f"Invalid interval [{self.lo}, {self.hi}]")

    def __contains__(self, i: int) -> bool:
        return self.lo <= i and (self.hi is None or i <= self.hi)

    @property
    def is_empty(self) -> bool:
        return self.hi is not None and self.hi < self.lo

    def intersect(self, other: "Interval") -> "Interval":
        lo = max(self.lo, other.lo)
        if self.hi is None:
            hi = other.hi
        elif other.hi is None:
            hi = self.hi
        else:
            hi = min(self.hi, other.hi)
        if hi is not None and hi < lo:
            return Interval(lo, lo - 1)
        return Interval(lo, hi)

    def __str__(self):
        return f"[{self.lo},{'inf' if self.hi is None else self.hi}]"


@dataclass(frozen=True)
class Vec00:
    """Finitely supported vector with exact rational entries; zeros are never stored."""

    entries: Tuple[Entry, ...] = ()

    def __post_init__(self):
        previous = 0
        for i, value in self.entries:
            if i <= previous:
                raise PreconditionError(f"Vec00 coordinates must be increasing and >= 1: {self.entries}")
            if value == 0:
                raise PreconditionError("Vec00 stores no zero entries")
            previous = i

    @classmethod
    def from_mapping(cls, values: Mapping[int, Rational]) -> "Vec00":
        return cls(tuple((int(i), Fraction(v)) for i, v in sorted(values.items()) if v != 0))

    @classmethod
    def from_pairs(cls, pairs: Iterable[Tuple[int, Rational]]) -> "Vec00":
        values: Dict[int, Fraction] = {}
        for i, v in pairs:
            values[i] = values.get(i, Fraction(0)) + Fraction(v)
        return cls.from_mapping(values)

    @classmethod
    def unit(cls, i: int, value: Rational = 1) -> "Vec00":
        return cls.from_mapping({i: value})

    @classmethod
    def indicator(cls, support: Iterable[int], value: Rational = 1) -> "Vec00":
        return cls.from_mapping({i: value for i in support})

    @property
    def support(self) -> Tuple[int, ...]:
        return tuple(i for i, _ in self.entries)

    @property
    def is_zero(self) -> bool:
        return not self.entries

    @property
    def minsupp(self) -> int:
        if not self.entries:
            raise PreconditionError("Empty support has no minimum")
        return self.entries[0][0]

    @property
    def maxsupp(self) -> int:
        if not self.entries:
            raise PreconditionError("Empty support has no maximum")
        return self.entries[-1][0]

    @property
    def range(self) -> Interval:
        """Smallest interval containing the support (empty for the zero vector)."""
        if not self.entries:
            return Interval(1, 0)
        return Interval(self.minsupp, self.maxsupp)

    def as_dict(self) -> Dict[int, Fraction]:
        return dict(self.entries)

    def coeff(self, i: int) -> Fraction:
        for j, value in self.entries:
            if j == i:
                return value
            if j > i:
                break
        return Fraction(0)

    def __iter__(self) -> Iterator[Entry]:
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)

    def __add__(self, other: "Vec00") -> "Vec00":
        return Vec00.from_pairs(list(self.entries) + list(other.entries))

    def __neg__(self) -> "Vec00":
        return Vec00(tuple((i, -v) for i, v in self.entries))

    def __sub__(self, other: "Vec00") -> "Vec00":
        return self + (-other)

    def scale(self, factor: Rational) -> "Vec00":
        factor = Fraction(factor)
        if factor == 0:
            return Vec00()
        return Vec00(tuple((i, v * factor) for i, v in self.entries))

    def __mul__(self, factor: Rational) -> "Vec00":
        return self.scale(factor)

    __rmul__ = __mul__

    def restrict(self, E: Interval) -> "Vec00":
        return Vec00(tuple((i, v) for i, v in self.entries if i in E))

    def dot(self, other: "Vec00") -> Fraction:
        mine = self.as_dict()
        return sum((mine[i] * v for i, v in other.entries if i in mine), Fraction(0))

    @property
    def l1(self) -> Fraction:
        return sum((abs(v) for _, v in self.entries), Fraction(0))

    @property
    def sup(self) -> Fraction:
        return max((abs(v) for _, v in self.entries), default=Fraction(0))

    @property
    def l2_square(self) -> Fraction:
        return sum((v * v for _, v in self.entries), Fraction(0))

    def __str__(self):
        return "[" + ",".join(f"({i},{_fmt(v)})" for i, v in self.entries) + "]"


def _fmt(value: Fraction) -> str:
    return f"{value.numerator}/{value.denominator}"


def successive(blocks: Iterable[Vec00]) -> bool:
    """True iff the nonzero blocks have successive supports."""
    previous = 0
    for block in blocks:
        if block.is_zero:
            continue
        if block.minsupp <= previous:
            return False
        previous = block.maxsupp
    return True


class TagKind(str, Enum):
    """How a functional entered its norming set."""
    G0 = "G0"
    G1 = "G1"
    GSP = "Gsp"
    GL2 = "Gl2"
    C = "C"
    TYPE_I = "I"
    TYPE_II = "II"
    TYPE_III = "III"


GROUND_KINDS = (TagKind.G0, TagKind.G1, TagKind.GSP, TagKind.GL2, TagKind.C)

Component = Tuple[int, Tuple[int, ...]]


@dataclass(frozen=True)
class FuncTag:
    """
    Tag of a functional.

    Attributes:
        kind: Ground kind or type I/II/III
        index: ind(f) for G1 elements, the operation index j for type I
        weight: w(f) (m_j for type I, m_{2j-1}^2 for G1 elements)
        components: (index, support) of the G1 pieces of Gsp / Gl2 elements
    """

    kind: TagKind
    index: Optional[int] = None
    weight: Optional[int] = None
    components: Tuple[Component, ...] = ()

    @property
    def index_set(self) -> frozenset:
        if self.kind == TagKind.G1:
            return frozenset({self.index})
        if self.kind in (TagKind.GSP, TagKind.GL2):
            return frozenset(j for j, _ in self.components)
        return frozenset()

    def restricted(self, E: Interval) -> "FuncTag":
        if not self.components:
            return self
        kept = []
        for j, support in self.components:
            inside = tuple(i for i in support if i in E)
            if inside:
                kept.append((j, inside))
        return FuncTag(self.kind, self.index, self.weight, tuple(kept))

    def __str__(self):
        parts = [self.kind.value]
        if self.index is not None:
            parts.append(f"j={self.index}")
        if self.weight is not None:
            parts.append(f"w={self.weight}")
        if self.components:
            parts.append("c=" + ";".join(f"{j}:{'.'.join(map(str, s))}" for j, s in self.components))
        return ",".join(parts)


class Rule(str, Enum):
    GROUND_LEAF = "ground"
    OP_J = "op"
    L2_COMBO = "l2"
    RATIONAL_CONVEX = "convex"


@dataclass(frozen=True)
class GroundWitness:
    """
    How a ground functional arises.

    G0/G1/C elements need no extra data. A Gsp element records its special
    sequence, signs and window; a Gl2 element records its parts and rational
    coefficients.
    """

    kind: TagKind
    sequence: Tuple["Func", ...] = ()
    signs: Tuple[int, ...] = ()
    window: Optional[Interval] = None
    parts: Tuple["GroundWitness", ...] = ()
    part_functionals: Tuple["Func", ...] = ()
    coefficients: Tuple[Fraction, ...] = ()

    def to_json(self) -> dict:
        data = {"kind": self.kind.value}
        if self.sequence:
            data["sequence"] = [canonical_serialize(f) for f in self.sequence]
            data["signs"] = list(self.signs)
        if self.window is not None:
            data["window"] = [self.window.lo, self.window.hi]
        if self.parts:
            data["parts"] = [p.to_json() for p in self.parts]
            data["part_functionals"] = [canonical_serialize(f) for f in self.part_functionals]
            data["coefficients"] = [_fmt(c) for c in self.coefficients]
        return data


@dataclass(frozen=True)
class AnalysisNode:
    """
    A node of a tree analysis.

    The root functional equals the composition of the children under `rule`:
    OP_J gives (1/weight) * sum of children (restricted to `window` when set),
    L2_COMBO gives sum coeffs[i] * children[i] + sum mu * e_t* over `fresh`,
    RATIONAL_CONVEX gives sum coeffs[i] * children[i].
    """

    functional: "Func"
    rule: Rule
    j: Optional[int] = None
    coeffs: Tuple[Fraction, ...] = ()
    children: Tuple["AnalysisNode", ...] = ()
    fresh: Tuple[Tuple[int, Fraction], ...] = ()
    window: Optional[Interval] = None
    ground: Optional[GroundWitness] = None
    odd: Optional[str] = None

    @property
    def height(self) -> int:
        return 1 + max((child.height for child in self.children), default=-1)

    def nodes(self) -> Iterator["AnalysisNode"]:
        yield self
        for child in self.children:
            yield from child.nodes()

    def to_json(self) -> dict:
        data = {
            "functional": canonical_serialize(self.functional),
            "rule": self.rule.value,
        }
        if self.j is not None:
            data["j"] = self.j
        if self.coeffs:
            data["coeffs"] = [_fmt(c) for c in self.coeffs]
        if self.fresh:
            data["fresh"] = [[t, _fmt(mu)] for t, mu in self.fresh]
        if self.window is not None:
            data["window"] = [self.window.lo, self.window.hi]
        if self.ground is not None:
            data["ground"] = self.ground.to_json()
        if self.odd is not None:
            data["odd"] = self.odd
        if self.children:
            data["children"] = [child.to_json() for child in self.children]
        return data

    def digest(self) -> str:
        text = json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class Func:
    base: Vec00
    tag: FuncTag
    analysis: Optional[AnalysisNode] = field(default=None, compare=False, repr=False)

    @classmethod
    def coordinate(cls, i: int, sign: int = 1) -> "Func":
        """The ground functional +-e_i*."""
        return cls(Vec00.unit(i, sign), FuncTag(TagKind.G0))

    @property
    def support(self) -> Tuple[int, ...]:
        return self.base.support

    @property
    def kind(self) -> TagKind:
        return self.tag.kind

    @property
    def weight(self) -> Optional[int]:
        return self.tag.weight

    @property
    def index(self) -> Optional[int]:
        return self.tag.index

    @property
    def range(self) -> Interval:
        return self.base.range

    @property
    def is_zero(self) -> bool:
        return self.base.is_zero

    def __call__(self, x: Vec00) -> Fraction:
        return apply(self, x)

    def __neg__(self) -> "Func":
        return Func(-self.base, self.tag, None)

    def with_analysis(self, node: AnalysisNode) -> "Func":
        return Func(self.base, self.tag, node)

    def __str__(self):
        return canonical_serialize(self)


def apply(f: Union[Func, Vec00], x: Vec00) -> Fraction:
    """Exact pairing sum f(i) x(i)."""
    base = f.base if isinstance(f, Func) else f
    return base.dot(x)


def restrict(f: Union[Func, Vec00], E: Interval) -> Union[Func, Vec00]:
    """
    Interval restriction Ef; tags are preserved.

    For Gsp / Gl2 elements the component list keeps only pieces meeting E, so
    the index set recomputes as the indices of the pieces that survive.
    """
    if isinstance(f, Vec00):
        return f.restrict(E)
    return Func(f.base.restrict(E), f.tag.restricted(E), None)


def canonical_serialize(f: Union[Func, Vec00]) -> str:
    """Deterministic text form `[(i,p/q),...]|tag|digest`."""
    if isinstance(f, Vec00):
        return str(f)
    digest = f.analysis.digest() if f.analysis is not None else "-"
    return f"{f.base}|{f.tag}|{digest}"


_ENTRY = re.compile(r"\((\d+),(-?\d+)/(\d+)\)")


def parse_vector(text: str) -> Vec00:
    """Parse `[(i,p/q),...]`; also accepts `i:v` comma lists such as `1:1/2,3:-1`."""
    text = text.strip()
    if text.startswith("["):
        body = text[1:-1] if text.endswith("]") else None
        if body is None:
            raise ParseError(f"Unterminated vector: '{text}'")
        entries = _ENTRY.findall(body)
        rebuilt = ",".join(f"({i},{p}/{q})" for i, p, q in entries)
        if rebuilt != body:
            raise ParseError(f"Invalid vector text: '{text}'")
        try:
            return Vec00(tuple((int(i), Fraction(int(p), int(q))) for i, p, q in entries))
        except (ZeroDivisionError, PreconditionError) as e:
            raise ParseError(f"Invalid vector text: '{text}' ({e})")
    pairs = []
    for chunk in filter(None, (c.strip() for c in text.split(","))):
        if ":" not in chunk:
            raise ParseError(f"Expected 'i:value' in '{chunk}'")
        index, value = chunk.split(":", 1)
        try:
            pairs.append((int(index), Fraction(value)))
        except (ValueError, ZeroDivisionError):
            raise ParseError(f"Invalid entry '{chunk}'")
    return Vec00.from_pairs(pairs)


def _parse_tag(text: str) -> FuncTag:
    parts = text.split(",")
    try:
        kind = TagKind(parts[0])
    except ValueError:
        raise ParseError(f"Unknown functional kind '{parts[0]}'")
    index = weight = None
    components: List[Component] = []
    for part in parts[1:]:
        key, _, value = part.partition("=")
        try:
            if key == "j":
                index = int(value)
            elif key == "w":
                weight = int(value)
            elif key == "c":
                for comp in value.split(";"):
                    j, _, support = comp.partition(":")
                    components.append((int(j), tuple(int(s) for s in support.split("."))))
            else:
                raise ParseError(f"Unknown tag field '{key}'")
        except ValueError:
            raise ParseError(f"Invalid tag field '{part}'")
    return FuncTag(kind, index, weight, tuple(components))


def parse_func(text: str) -> Func:
    """
    Inverse of canonical_serialize; the analysis digest is not resolvable and is dropped.
    """
    pieces = text.strip().split("|")
    if len(pieces) != 3:
        raise ParseError(f"Expected 'vector|tag|digest', got '{text}'")
    return Func(parse_vector(pieces[0]), _parse_tag(pieces[1]))

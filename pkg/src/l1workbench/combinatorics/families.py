"""
Regular families of finite subsets of N.

Supported families are A(n) (sets of size at most n), the Schreier families
S(xi) for xi < w^w, compositions outer[inner] and restrictions base|N=cap.
Finite sets are strictly increasing tuples of positive integers.
"""
import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, Iterable, Iterator, List, Sequence, Tuple, Union

from l1workbench.combinatorics.ordinal import Ordinal, fundamental_sequence, parse_ordinal
from l1workbench.utils.errors import ParseError, PreconditionError, ResourceCapError

logger = logging.getLogger(__name__)

FinSet = Tuple[int, ...]

DEFAULT_ENUMERATION_CAP = 30


def as_finset(elements: Iterable[int]) -> FinSet:
    """Validate and normalize an iterable into a FinSet."""
    result = tuple(sorted(set(int(e) for e in elements)))
    if result and result[0] < 1:
        raise PreconditionError(f"Finite sets live in N = {{1, 2, ...}}, got {result}")
    return result


class FamilySpec:
    """Base class of the lazily evaluated family descriptions."""

    def contains(self, F: Sequence[int]) -> bool:
        return member(self, F)


@dataclass(frozen=True)
class AFamily(FamilySpec):
    n: int

    def __str__(self):
        return f"A({self.n})"


@dataclass(frozen=True)
class Schreier(FamilySpec):
    xi: Ordinal

    def __str__(self):
        return f"S({self.xi})"


@dataclass(frozen=True)
class Compose(FamilySpec):
    outer: FamilySpec
    inner: FamilySpec

    def __str__(self):
        outer = f"({self.outer})" if isinstance(self.outer, Restrict) else str(self.outer)
        return f"{outer}[{self.inner}]"


@dataclass(frozen=True)
class Restrict(FamilySpec):
    base: FamilySpec
    cap: int

    def __str__(self):
        return f"{self.base}|N={self.cap}"


def schreier(xi: Union[int, Ordinal]) -> Schreier:
    return Schreier(Ordinal.of(xi))


@lru_cache(maxsize=None)
def _schreier_member(xi: Ordinal, F: FinSet) -> bool:
    if not F:
        return True
    if xi.is_zero:
        return len(F) <= 1
    if xi.is_successor:
        return _block_count(xi.predecessor(), F, F[0]) <= F[0]
    # limit: F in S(xi_n) for some n <= min F
    return any(_schreier_member(fundamental_sequence(xi, n), F) for n in range(1, F[0] + 1))


def _block_count(inner: Ordinal, F: FinSet, limit: int) -> int:
    """
    Least number of consecutive S(inner) blocks covering F.

    Blocks are taken left to right, longest admissible block first; by
    heredity of S(inner) this greedy split is minimal. Stops once `limit`
    is exceeded.
    """
    count = 0
    start = 0
    while start < len(F):
        end = start + 1
        while end < len(F) and _schreier_member(inner, F[start:end + 1]):
            end += 1
        count += 1
        if count > limit:
            return count
        start = end
    return count


def _compose_member(outer: FamilySpec, inner: FamilySpec, F: FinSet) -> bool:
    memo: Dict[Tuple[int, FinSet], bool] = {}

    def search(start: int, minima: FinSet) -> bool:
        if not member(outer, minima):
            return False
        if start == len(F):
            return True
        key = (start, minima)
        if key not in memo:
            memo[key] = any(
                member(inner, F[start:end]) and search(end, minima + (F[start],))
                for end in range(len(F), start, -1)
            )
        return memo[key]

    return search(0, ())


def member(spec: FamilySpec, F: Sequence[int]) -> bool:
    """
    Decide F in spec.

    Args:
        spec: Family description
        F: Finite set (any increasing sequence of positive integers)

    Returns:
        True iff F belongs to the family; the empty set belongs to every family
    """
    F = tuple(F)
    if not F:
        return True
    if isinstance(spec, AFamily):
        return len(F) <= spec.n
    if isinstance(spec, Schreier):
        return _schreier_member(spec.xi, F)
    if isinstance(spec, Restrict):
        return F[-1] <= spec.cap and member(spec.base, F)
    if isinstance(spec, Compose):
        return _compose_member(spec.outer, spec.inner, F)
    raise PreconditionError(f"Unknown family spec: {spec!r}")


def is_maximal(spec: FamilySpec, F: Sequence[int]) -> bool:
    """
    Maximality of a member: no proper extension stays in the family.

    For spreading families it suffices to test the extension by max F + 1.
    Restricted families lose spreading at the cap, so every k <= cap is tried.
    """
    F = tuple(F)
    if not member(spec, F):
        raise PreconditionError(f"{F} is not a member of {spec}")
    if not F:
        return False
    if isinstance(spec, Restrict):
        present = set(F)
        return not any(
            member(spec, tuple(sorted(F + (k,))))
            for k in range(1, spec.cap + 1)
            if k not in present
        )
    return not member(spec, F + (F[-1] + 1,))


def admissible(spec: FamilySpec, blocks: Sequence) -> bool:
    """
    Check spec-admissibility of a block sequence.

    Args:
        spec: Family description
        blocks: Vectors or functionals exposing `.support`

    Returns:
        True iff supports are successive and their minima form a member of spec
    """
    if not blocks:
        raise PreconditionError("admissible() needs at least one block")
    minima = []
    previous_max = 0
    for block in blocks:
        support = sorted(block.support)
        if not support:
            raise PreconditionError("admissible() blocks must have nonempty support")
        if support[0] <= previous_max:
            return False
        minima.append(support[0])
        previous_max = support[-1]
    return member(spec, tuple(minima))


def iter_restricted(spec: FamilySpec, N: int) -> Iterator[FinSet]:
    """Members with elements <= N in lexicographic order; relies on heredity."""

    def extend(current: FinSet) -> Iterator[FinSet]:
        yield current
        start = current[-1] + 1 if current else 1
        for k in range(start, N + 1):
            candidate = current + (k,)
            if member(spec, candidate):
                yield from extend(candidate)

    yield from extend(())


def enumerate_restricted(spec: FamilySpec, N: int, cap: int = DEFAULT_ENUMERATION_CAP) -> List[FinSet]:
    """
    All members of spec inside {1..N}, lexicographically ordered.

    Raises:
        ResourceCapError: if N exceeds the configured cap
    """
    if N > cap:
        raise ResourceCapError(f"enumerate_restricted: N={N} exceeds cap {cap}")
    result = list(iter_restricted(spec, N))
    logger.debug(f"Enumerated {len(result)} members of {spec} within [1, {N}]")
    return result


class _SpecParser:
    """Recursive descent parser for 'S(w*1+2)', 'A(5)', 'S(2)[S(1)]', 'S(2)|N=20'."""

    def __init__(self, text: str):
        self.text = text.replace(" ", "")
        self.pos = 0

    def fail(self, message: str):
        raise ParseError(f"{message} at position {self.pos} in '{self.text}'")

    def peek(self, token: str) -> bool:
        return self.text.startswith(token, self.pos)

    def expect(self, token: str):
        if not self.peek(token):
            self.fail(f"Expected '{token}'")
        self.pos += len(token)

    def number(self) -> int:
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos].isdigit():
            self.pos += 1
        if start == self.pos:
            self.fail("Expected integer")
        return int(self.text[start:self.pos])

    def parse(self) -> FamilySpec:
        spec = self.spec()
        if self.pos != len(self.text):
            self.fail("Trailing input")
        return spec

    def spec(self) -> FamilySpec:
        result = self.atom()
        while self.peek("["):
            self.expect("[")
            inner = self.spec()
            self.expect("]")
            result = Compose(result, inner)
        while self.peek("|N="):
            self.expect("|N=")
            result = Restrict(result, self.number())
        return result

    def atom(self) -> FamilySpec:
        if self.peek("A("):
            self.expect("A(")
            n = self.number()
            self.expect(")")
            return AFamily(n)
        if self.peek("S("):
            self.expect("S(")
            depth = 1
            start = self.pos
            while self.pos < len(self.text) and depth:
                if self.text[self.pos] == "(":
                    depth += 1
                elif self.text[self.pos] == ")":
                    depth -= 1
                self.pos += 1
            if depth:
                self.fail("Unbalanced parentheses")
            return Schreier(parse_ordinal(self.text[start:self.pos - 1]))
        if self.peek("("):
            self.expect("(")
            inner = self.spec()
            self.expect(")")
            return inner
        self.fail("Expected A(...), S(...) or (...)")


def parse_family(text: str) -> FamilySpec:
    """Parse the family text syntax; str(spec) prints it back."""
    return _SpecParser(text).parse()


def parse_finset(text: str) -> FinSet:
    """Parse '3,4,5' (or '{3,4,5}', or '' for the empty set)."""
    text = text.strip().strip("{}")
    if not text:
        return ()
    try:
        return as_finset(int(part) for part in text.split(","))
    except ValueError:
        raise ParseError(f"Invalid finite set: '{text}'")

"""
Ordinals below w^w in Cantor normal form.

An ordinal is a tuple of (exponent, coefficient) terms with strictly decreasing
exponents, highest first; the empty tuple is 0. The text form is
"w^2*3+w*1+4" and the printer always emits the fully explicit form, so
`parse_ordinal(str(a)) == a` and `str(parse_ordinal(s)) == s` for printed s.
"""
import logging
import re
from dataclasses import dataclass
from enum import Enum
from functools import total_ordering
from typing import Tuple, Union

from l1workbench.utils.errors import ParseError, PreconditionError

logger = logging.getLogger(__name__)

Term = Tuple[int, int]


class NegativeOrdinalError(ArithmeticError):
    pass


class Comparison(Enum):
    """Outcome of an ordinal comparison."""
    LT = "LT"
    EQ = "EQ"
    GT = "GT"


@total_ordering
@dataclass(frozen=True)
class Ordinal:
    """Cantor normal form ordinal below w^w."""

    terms: Tuple[Term, ...] = ()

    def __post_init__(self):
        previous = None
        for exponent, coefficient in self.terms:
            if exponent < 0 or coefficient < 1:
                raise PreconditionError(f"Invalid Cantor normal form term ({exponent}, {coefficient})")
            if previous is not None and exponent >= previous:
                raise PreconditionError(f"Exponents must strictly decrease: {self.terms}")
            previous = exponent

    @classmethod
    def of(cls, value: Union[int, "Ordinal"]) -> "Ordinal":
        if isinstance(value, Ordinal):
            return value
        if value < 0:
            raise NegativeOrdinalError(f"No negative ordinals: {value}")
        return cls(((0, value),)) if value else cls()

    @classmethod
    def omega_power(cls, exponent: int, coefficient: int = 1) -> "Ordinal":
        return cls(((exponent, coefficient),))

    def __lt__(self, other):
        if isinstance(other, int):
            other = Ordinal.of(other)
        if not isinstance(other, Ordinal):
            return NotImplemented
        return self.terms < other.terms

    def __eq__(self, other):
        if isinstance(other, int):
            return other >= 0 and self.terms == Ordinal.of(other).terms
        if not isinstance(other, Ordinal):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(self.terms)

    def __bool__(self):
        return bool(self.terms)

    def __add__(self, other: Union[int, "Ordinal"]) -> "Ordinal":
        other = Ordinal.of(other)
        if not other.terms:
            return self
        lead_exp, lead_coeff = other.terms[0]
        kept = [term for term in self.terms if term[0] > lead_exp]
        same = [coeff for exp, coeff in self.terms if exp == lead_exp]
        if same:
            kept.append((lead_exp, same[0] + lead_coeff))
            return Ordinal(tuple(kept) + other.terms[1:])
        return Ordinal(tuple(kept) + other.terms)

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def is_successor(self) -> bool:
        return bool(self.terms) and self.terms[-1][0] == 0

    @property
    def is_limit(self) -> bool:
        return bool(self.terms) and self.terms[-1][0] >= 1

    @property
    def is_finite(self) -> bool:
        return not self.terms or (len(self.terms) == 1 and self.terms[0][0] == 0)

    def predecessor(self) -> "Ordinal":
        if not self.is_successor:
            raise NegativeOrdinalError(f"{self} has no predecessor")
        exponent, coefficient = self.terms[-1]
        head = self.terms[:-1]
        return Ordinal(head + ((0, coefficient - 1),)) if coefficient > 1 else Ordinal(head)

    def successor(self) -> "Ordinal":
        return self + 1

    def __int__(self):
        if not self.is_finite:
            raise PreconditionError(f"{self} is not finite")
        return self.terms[0][1] if self.terms else 0

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for exponent, coefficient in self.terms:
            if exponent == 0:
                parts.append(str(coefficient))
            elif exponent == 1:
                parts.append(f"w*{coefficient}")
            else:
                parts.append(f"w^{exponent}*{coefficient}")
        return "+".join(parts)

    def __repr__(self):
        return f"Ordinal({self})"


def compare(a: Union[int, Ordinal], b: Union[int, Ordinal]) -> Comparison:
    """Total order of ordinals, reported as LT / EQ / GT."""
    a, b = Ordinal.of(a), Ordinal.of(b)
    if a.terms == b.terms:
        return Comparison.EQ
    return Comparison.LT if a.terms < b.terms else Comparison.GT


def fundamental_sequence(xi: Union[int, Ordinal], n: int) -> Ordinal:
    """
    Canonical fundamental sequence of a limit ordinal.

    If xi = beta + w^k*c with k >= 1 then xi_n = beta + w^k*(c-1) + w^(k-1)*n.

    Args:
        xi: Limit ordinal
        n: Index, n >= 1

    Returns:
        The n-th element xi_n
    """
    xi = Ordinal.of(xi)
    if not xi.is_limit:
        raise PreconditionError(f"Fundamental sequences exist only for limit ordinals, got {xi}")
    if n < 1:
        raise PreconditionError(f"Fundamental sequence index must be >= 1, got {n}")
    exponent, coefficient = xi.terms[-1]
    terms = list(xi.terms[:-1])
    if coefficient > 1:
        terms.append((exponent, coefficient - 1))
    terms.append((exponent - 1, n))
    return Ordinal(tuple(terms))


_TERM = re.compile(r"^(?:w(?:\^(\d+))?(?:\*(\d+))?|(\d+))$")


def parse_ordinal(text: str) -> Ordinal:
    """
    Parse the text syntax "w^2*3+w*1+4".

    Accepts the explicit printed form and the shorthands "w", "w^2", "w*3".
    """
    text = text.strip().replace(" ", "")
    if not text:
        raise ParseError("Empty ordinal text")
    if text == "0":
        return Ordinal()
    terms = []
    for chunk in text.split("+"):
        match = _TERM.match(chunk)
        if not match:
            raise ParseError(f"Invalid ordinal term '{chunk}' in '{text}'")
        exp_text, coeff_text, finite_text = match.groups()
        if finite_text is not None:
            exponent, coefficient = 0, int(finite_text)
        else:
            exponent = int(exp_text) if exp_text is not None else 1
            coefficient = int(coeff_text) if coeff_text is not None else 1
        if coefficient == 0:
            raise ParseError(f"Zero coefficient in '{text}'")
        terms.append((exponent, coefficient))
    try:
        return Ordinal(tuple(terms))
    except PreconditionError as e:
        raise ParseError(f"Not in Cantor normal form: '{text}' ({e})")

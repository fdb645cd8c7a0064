"""
Exact values of the form sum c_i * sqrt(r_i) with rational c_i, r_i.

Norm values with l2 layers are square roots of rationals; error terms of the
Basic Inequality are sums of such roots. Surd keeps them exact: radicands are
reduced to square-free integers, commensurable terms are merged, and signs are
decided by directed rounding at increasing precision.
"""
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import total_ordering
from typing import Dict, Iterable, Tuple, Union

from l1workbench.utils.errors import PreconditionError, ResourceCapError

logger = logging.getLogger(__name__)

Rational = Union[int, Fraction]

DEFAULT_BITS = 64
MAX_BITS = 8192
TRIAL_BOUND = 2000
_SMALL_PRIMES = [p for p in range(2, TRIAL_BOUND) if all(p % q for q in range(2, int(p ** 0.5) + 1))]


def sqrt_floor(q: Rational, bits: int = DEFAULT_BITS) -> Fraction:
    """Largest multiple of 2^-bits that is <= sqrt(q)."""
    q = Fraction(q)
    if q < 0:
        raise PreconditionError(f"sqrt of negative value {q}")
    scale = 1 << bits
    return Fraction(math.isqrt(q.numerator * scale * scale // q.denominator), scale)


def sqrt_upper(q: Rational, bits: int = DEFAULT_BITS) -> Fraction:
    """Smallest multiple of 2^-bits that is >= sqrt(q)."""
    low = sqrt_floor(q, bits)
    return low if low * low == Fraction(q) else low + Fraction(1, 1 << bits)


def _rational_sqrt(q: Fraction):
    if q < 0:
        return None
    num, den = math.isqrt(q.numerator), math.isqrt(q.denominator)
    if num * num == q.numerator and den * den == q.denominator:
        return Fraction(num, den)
    return None


def _reduce_radicand(r: Fraction) -> Tuple[Fraction, int]:
    """
    Write sqrt(r) = c * sqrt(k) with rational c and integer k.

    Primes below TRIAL_BOUND are divided out completely; a cofactor below
    TRIAL_BOUND^3 is then 1, p, p*q or p^2, so k is square-free. Larger
    cofactors may keep a square factor; Surd merges such radicands with
    commensurable_root.
    """
    k = r.numerator * r.denominator
    c = Fraction(1, r.denominator)
    free = 1
    for p in _SMALL_PRIMES:
        if p * p > k:
            break
        exponent = 0
        while k % p == 0:
            k //= p
            exponent += 1
        c *= p ** (exponent // 2)
        if exponent % 2:
            free *= p
    root = math.isqrt(k)
    if root * root == k:
        return c * root, free
    return c, free * k


def commensurable_root(k1: int, k2: int):
    """sqrt(k1 / k2) when it is rational, else None."""
    product = k1 * k2
    root = math.isqrt(product)
    if root * root != product:
        return None
    return Fraction(root, k2)


@total_ordering
@dataclass(frozen=True)
class Surd:
    """Exact real number sum coef * sqrt(radicand); radicand 1 carries the rational part."""

    terms: Tuple[Tuple[int, Fraction], ...] = ()

    @classmethod
    def _from_dict(cls, acc: Dict[int, Fraction]) -> "Surd":
        merged: Dict[int, Fraction] = {}
        for k, c in sorted(acc.items()):
            for rep in merged:
                ratio = commensurable_root(k, rep)
                if ratio is not None:
                    merged[rep] += c * ratio
                    break
            else:
                merged[k] = c
        return cls(tuple((k, c) for k, c in merged.items() if c != 0))

    @classmethod
    def of(cls, value: Union[Rational, "Surd"]) -> "Surd":
        if isinstance(value, Surd):
            return value
        value = Fraction(value)
        return cls(((1, value),)) if value else cls()

    @classmethod
    def sqrt(cls, q: Rational) -> "Surd":
        q = Fraction(q)
        if q < 0:
            raise PreconditionError(f"sqrt of negative value {q}")
        if q == 0:
            return cls()
        coef, k = _reduce_radicand(q)
        return cls(((k, coef),))

    @property
    def is_rational(self) -> bool:
        return all(k == 1 for k, _ in self.terms)

    def to_fraction(self) -> Fraction:
        if not self.is_rational:
            raise PreconditionError(f"{self} is not rational")
        return self.terms[0][1] if self.terms else Fraction(0)

    def square(self) -> Fraction:
        """Exact square of a single-term surd."""
        if len(self.terms) > 1:
            raise PreconditionError(f"square() needs a single term, got {self}")
        if not self.terms:
            return Fraction(0)
        k, c = self.terms[0]
        return c * c * k

    def __add__(self, other) -> "Surd":
        other = Surd.of(other)
        acc: Dict[int, Fraction] = dict(self.terms)
        for k, c in other.terms:
            acc[k] = acc.get(k, Fraction(0)) + c
        return Surd._from_dict(acc)

    __radd__ = __add__

    def __neg__(self) -> "Surd":
        return Surd(tuple((k, -c) for k, c in self.terms))

    def __sub__(self, other) -> "Surd":
        return self + (-Surd.of(other))

    def __rsub__(self, other) -> "Surd":
        return Surd.of(other) - self

    def __mul__(self, other) -> "Surd":
        other = Surd.of(other)
        acc: Dict[int, Fraction] = {}
        for k1, c1 in self.terms:
            for k2, c2 in other.terms:
                coef, k = _reduce_radicand(Fraction(k1 * k2))
                acc[k] = acc.get(k, Fraction(0)) + c1 * c2 * coef
        return Surd._from_dict(acc)

    __rmul__ = __mul__

    def __truediv__(self, other: Rational) -> "Surd":
        return self * (Fraction(1) / Fraction(other))

    def bounds(self, bits: int = DEFAULT_BITS) -> Tuple[Fraction, Fraction]:
        """Rational enclosure [lower, upper] of the value."""
        lower = upper = Fraction(0)
        for k, c in self.terms:
            if k == 1:
                lower += c
                upper += c
                continue
            lo, hi = sqrt_floor(k, bits), sqrt_upper(k, bits)
            if c > 0:
                lower += c * lo
                upper += c * hi
            else:
                lower += c * hi
                upper += c * lo
        return lower, upper

    def sign(self) -> int:
        if not self.terms:
            return 0
        if self.is_rational:
            value = self.to_fraction()
            return (value > 0) - (value < 0)
        if len(self.terms) == 2 and any(k == 1 for k, _ in self.terms):
            # a + b sqrt(k): compare squares
            a = dict(self.terms)[1]
            k, b = next((k, c) for k, c in self.terms if k != 1)
            if a >= 0 and b >= 0:
                return 1
            if a <= 0 and b <= 0:
                return -1
            lhs, rhs = a * a, b * b * k
            dominant = 1 if lhs > rhs else -1
            return dominant if a > 0 else -dominant
        bits = DEFAULT_BITS
        while bits <= MAX_BITS:
            lower, upper = self.bounds(bits)
            if lower > 0:
                return 1
            if upper < 0:
                return -1
            bits *= 2
        raise ResourceCapError(f"Could not decide the sign of {self} within {MAX_BITS} bits")

    def __eq__(self, other):
        if not isinstance(other, (Surd, int, Fraction)):
            return NotImplemented
        return (self - Surd.of(other)).terms == ()

    def __hash__(self):
        # term count and rational part do not depend on the radicand representatives
        return hash((len(self.terms), dict(self.terms).get(1, Fraction(0))))

    def __lt__(self, other):
        if not isinstance(other, (Surd, int, Fraction)):
            return NotImplemented
        return (self - Surd.of(other)).sign() < 0

    def __float__(self):
        return float(sum(c * math.sqrt(k) for k, c in self.terms)) if self.terms else 0.0

    def lower(self, bits: int = DEFAULT_BITS) -> Fraction:
        return self.bounds(bits)[0]

    def upper(self, bits: int = DEFAULT_BITS) -> Fraction:
        return self.bounds(bits)[1]

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for k, c in self.terms:
            if k == 1:
                parts.append(str(c))
            elif c == 1:
                parts.append(f"sqrt({k})")
            else:
                parts.append(f"{c}*sqrt({k})")
        return "+".join(parts).replace("+-", "-")

    def __repr__(self):
        return f"Surd({self})"


def surd_max(values: Iterable[Surd]) -> Surd:
    values = list(values)
    if not values:
        return Surd()
    best = values[0]
    for value in values[1:]:
        if value > best:
            best = value
    return best


def render(value: Union[Surd, Fraction, int]) -> dict:
    """JSON rendering: exact text plus a decimal approximation."""
    value = Surd.of(value)
    data = {"exact": str(value), "decimal": f"{float(value):.12g}"}
    if len(value.terms) == 1 and value.terms[0][1] > 0:
        data["square"] = str(value.square())
    return data

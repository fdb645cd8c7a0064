"""
Parameter profiles: the weight sequence m_j and admissibility sequence n_j.

The paper profile has m_1 = 2^5, m_{j+1} = m_j^5, n_1 = 2^6 and
n_{j+1} = (2 n_j)^{s_j} with 2^{s_j} = m_{j+1}^3; its numbers are handled
through base-2 exponents and only materialized on demand. Geometric profiles
(mini, micro) give explicit prefixes and continue by doubling, so every series
over them has an exact closed form.
"""
import logging
from abc import ABC, abstractmethod
from fractions import Fraction
from functools import lru_cache
from typing import Optional, Sequence, Tuple

from l1workbench.norms.values import sqrt_upper
from l1workbench.utils.errors import PreconditionError, ResourceCapError

logger = logging.getLogger(__name__)

MAX_MATERIALIZED_BITS = 1 << 22
_TRUNCATION_EXPONENT = 1024

UNMET_GROWTH = "growth"
UNMET_EXACT_PAIR_SUP = "exact_pair_sup"
UNMET_ATTRACTOR_UPPER = "attractor_upper"
MINI_UNMET = (UNMET_GROWTH, UNMET_EXACT_PAIR_SUP, UNMET_ATTRACTOR_UPPER)

DEFAULT_MINI_M = (2, 4, 8, 16, 32, 64)
DEFAULT_MINI_N = (4, 8, 16, 32, 64, 128)
MICRO_M = (2, 4)
MICRO_N = (2, 4)


class ParameterProfile(ABC):
    """Sequences (m_j), (n_j) indexed from j = 1."""

    name: str
    unmet: Tuple[str, ...] = ()

    @abstractmethod
    def m(self, j: int) -> int:
        ...

    @abstractmethod
    def n(self, j: int) -> int:
        ...

    @abstractmethod
    def m_power_sum(self, power: int, start: int, step: int = 1) -> Tuple[Fraction, Fraction]:
        """Enclosure of sum_{k>=0} m_{start + k*step}^{-power}."""

    def declares_unmet(self, clause: str) -> bool:
        return clause in self.unmet

    def c0_bounds(self) -> Tuple[Fraction, Fraction]:
        """c0 = sum_j m_j^{-2}."""
        return self.m_power_sum(2, 1)

    def c1_square_bounds(self) -> Tuple[Fraction, Fraction]:
        """c1^2 = sum_n c0^n = 1/(1 - c0)."""
        low, high = self.c0_bounds()
        return 1 / (1 - low), 1 / (1 - high)

    def c1_upper(self) -> Fraction:
        return sqrt_upper(self.c1_square_bounds()[1])

    def n_at_least(self, j: int, size: int) -> bool:
        return self.n(j) >= size

    def first_n_at_least(self, size: int, start: int = 1, step: int = 1) -> int:
        """Least j in start, start+step, ... with n_j >= size."""
        j = start
        while not self.n_at_least(j, size):
            j += step
        return j

    def validate(self, check_upto: int = 6) -> "ParameterProfile":
        previous_m = previous_n = 0
        for j in range(1, check_upto + 1):
            m, n = self.m(j), self.n(j)
            if m <= previous_m or n <= previous_n:
                raise PreconditionError(f"Profile '{self.name}': m and n must be strictly increasing (j={j})")
            if n % 2:
                raise PreconditionError(f"Profile '{self.name}': n_{j} = {n} is not even")
            previous_m, previous_n = m, n
        if self.m(1) < 2:
            raise PreconditionError(f"Profile '{self.name}': m_1 must be >= 2")
        if self.c0_bounds()[1] >= 1:
            raise PreconditionError(f"Profile '{self.name}': c0 = sum m_j^-2 must be < 1")
        return self

    def to_json(self, upto: int = 6) -> dict:
        return {
            "name": self.name,
            "m": [str(self.m(j)) for j in range(1, upto + 1)],
            "n": [str(self.n(j)) for j in range(1, upto + 1)],
            "unmet": list(self.unmet),
        }


class GeometricProfile(ParameterProfile):
    """Explicit prefixes of m and n, continued by m_{k+1} = 2 m_k and n_{k+1} = 2 n_k."""

    def __init__(self, name: str, m_prefix: Sequence[int], n_prefix: Sequence[int],
                 unmet: Tuple[str, ...] = MINI_UNMET):
        if not m_prefix or not n_prefix:
            raise PreconditionError(f"Profile '{name}' needs nonempty m and n prefixes")
        self.name = name
        self.m_prefix = tuple(int(v) for v in m_prefix)
        self.n_prefix = tuple(int(v) for v in n_prefix)
        self.unmet = tuple(unmet)
        for prefix, label in ((self.m_prefix, "m"), (self.n_prefix, "n")):
            if any(b <= a for a, b in zip(prefix, prefix[1:])):
                raise PreconditionError(f"Profile '{name}': {label} prefix must be strictly increasing")

    @staticmethod
    def _extend(prefix: Tuple[int, ...], j: int) -> int:
        if j < 1:
            raise PreconditionError(f"Indices start at 1, got {j}")
        if j <= len(prefix):
            return prefix[j - 1]
        return prefix[-1] << (j - len(prefix))

    def m(self, j: int) -> int:
        return self._extend(self.m_prefix, j)

    def n(self, j: int) -> int:
        return self._extend(self.n_prefix, j)

    def m_power_sum(self, power: int, start: int, step: int = 1) -> Tuple[Fraction, Fraction]:
        total = Fraction(0)
        j = max(start, 1)
        while j <= len(self.m_prefix):
            total += Fraction(1, self.m(j) ** power)
            j += step
        ratio = Fraction(1, 2 ** (power * step))
        total += Fraction(1, self.m(j) ** power) / (1 - ratio)
        return total, total

    def __repr__(self):
        return f"GeometricProfile({self.name}, m={self.m_prefix}, n={self.n_prefix})"


class PaperProfile(ParameterProfile):
    """m_j = 2^(5^j), s_j = 3 * 5^(j+1), n_j = 2^(e_j) with e_1 = 6, e_{j+1} = (e_j + 1) s_j."""

    name = "paper"
    unmet = ()

    @staticmethod
    def log2_m(j: int) -> int:
        return 5 ** j

    @staticmethod
    def s(j: int) -> int:
        return 3 * 5 ** (j + 1)

    @staticmethod
    @lru_cache(maxsize=None)
    def log2_n(j: int) -> int:
        if j < 1:
            raise PreconditionError(f"Indices start at 1, got {j}")
        if j == 1:
            return 6
        return (PaperProfile.log2_n(j - 1) + 1) * PaperProfile.s(j - 1)

    @staticmethod
    def _materialize(bits: int, label: str) -> int:
        if bits > MAX_MATERIALIZED_BITS:
            raise ResourceCapError(f"{label} has {bits} bits; refusing to materialize")
        return 1 << bits

    def m(self, j: int) -> int:
        return self._materialize(self.log2_m(j), f"m_{j}")

    def n(self, j: int) -> int:
        return self._materialize(self.log2_n(j), f"n_{j}")

    def n_at_least(self, j: int, size: int) -> bool:
        return self.log2_n(j) >= max(size - 1, 0).bit_length()

    def m_power_sum(self, power: int, start: int, step: int = 1) -> Tuple[Fraction, Fraction]:
        # terms decay like 2^(-power*5^j); the first omitted term bounds the whole tail by doubling
        total = Fraction(0)
        j = max(start, 1)
        while power * self.log2_m(j) <= _TRUNCATION_EXPONENT:
            total += Fraction(1, 2 ** (power * self.log2_m(j)))
            j += step
        tail = Fraction(2, 2 ** (power * self.log2_m(j)))
        return total, total + tail


def paper_growth_condition(j: int) -> bool:
    """
    Decide 260 * m_{2j}^4 <= n_{2j-1} for the paper profile on base-2 exponents.

    Since 2^8 < 260 <= 2^9 the inequality holds iff log2 n_{2j-1} - 4 log2 m_{2j} >= 9.
    """
    difference = PaperProfile.log2_n(2 * j - 1) - 4 * PaperProfile.log2_m(2 * j)
    return difference >= 9


def make_profile(kind: str, m: Optional[Sequence[int]] = None, n: Optional[Sequence[int]] = None,
                 unmet: Optional[Sequence[str]] = None) -> ParameterProfile:
    """
    Build and validate a profile.

    Args:
        kind: 'paper', 'mini' or 'micro'
        m: Explicit m prefix for mini profiles
        n: Explicit n prefix for mini profiles
        unmet: Clauses the profile is not expected to satisfy

    Returns:
        Validated ParameterProfile
    """
    if kind == "paper":
        profile: ParameterProfile = PaperProfile()
        return profile.validate(check_upto=3)
    if kind == "mini":
        profile = GeometricProfile("mini", m or DEFAULT_MINI_M, n or DEFAULT_MINI_N,
                                   tuple(unmet) if unmet is not None else MINI_UNMET)
    elif kind == "micro":
        profile = GeometricProfile("micro", m or MICRO_M, n or MICRO_N,
                                   tuple(unmet) if unmet is not None else MINI_UNMET)
    else:
        raise PreconditionError(f"Unknown profile kind '{kind}'")
    logger.debug(f"Built profile {profile!r}")
    return profile.validate()


def profile_from_config(config) -> ParameterProfile:
    if config.profile == "mini":
        return make_profile("mini", config.mini_m, config.mini_n)
    return make_profile(config.profile)

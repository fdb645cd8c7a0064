"""
Coding functions and the partition of N used by attractor sequences.

The coding functions are allocate-on-first-use registries:

- sigma1 maps special-sequence prefixes (f_1, ..., f_i) to even naturals,
  strictly above the index of f_i and above the value of the parent prefix;
- sigma maps rational block sequences (f_1, ..., f_d) to even naturals v with
  m_{2v}^{1/2} > max_i max_l |f_i(e_l)|^{-1} * maxsupp f_d.

Registries persist as sorted `key-hash TAB canonical-key TAB value` lines.
"""
import hashlib
import logging
import threading
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

from l1workbench.spaces.linspace import Func, TagKind, canonical_serialize, parse_func
from l1workbench.spaces.profiles import ParameterProfile
from l1workbench.utils.errors import ParseError, PreconditionError, RegistryFrozenError

logger = logging.getLogger(__name__)

SIGMA1 = "sigma1"
SIGMA = "sigma"
KEY_SEPARATOR = " ; "


def in_m1(j: int) -> bool:
    """M1 = odd naturals (starting indices of special sequences)."""
    return j >= 1 and j % 2 == 1


def in_m2(j: int) -> bool:
    return j >= 2 and j % 2 == 0


in_n1 = in_m1
in_n2 = in_m2


def pair(i: int, k: int) -> int:
    """Bijection N x N -> N, (i, k) -> 2^(i-1) (2k - 1); Lambda_i is its i-th row."""
    if i < 1 or k < 1:
        raise PreconditionError(f"pair() needs i, k >= 1, got ({i}, {k})")
    return (1 << (i - 1)) * (2 * k - 1)


def unpair(n: int) -> Tuple[int, int]:
    if n < 1:
        raise PreconditionError(f"unpair() needs n >= 1, got {n}")
    i = (n & -n).bit_length()
    return i, ((n >> (i - 1)) + 1) // 2


def lambda_index(n: int) -> int:
    """The unique i with n in Lambda_i."""
    return unpair(n)[0]


def lambda_member(i: int, n: int) -> bool:
    return lambda_index(n) == i


def l_member(n: int) -> bool:
    """n in L iff n = pair(i, k) with k even."""
    return unpair(n)[1] % 2 == 0


def lambda_elements(i: int, start: int = 1, in_l: Optional[bool] = None) -> Iterator[int]:
    """Increasing elements of Lambda_i that are >= start, optionally restricted to L or its complement."""
    k = 1
    while pair(i, k) < start:
        k += 1
    while True:
        if in_l is None or (k % 2 == 0) == in_l:
            yield pair(i, k)
        k += 1


def _key_hash(key: str) -> str:
    return hashlib.sha256(key.encode()).hexdigest()[:16]


def prefix_key(prefix: Sequence[Func]) -> str:
    """Canonical key of a functional sequence; analysis trees do not enter the key."""
    return KEY_SEPARATOR.join(canonical_serialize(Func(f.base, f.tag)) for f in prefix)


def parse_prefix_key(key: str) -> Tuple[Func, ...]:
    return tuple(parse_func(part) for part in key.split(KEY_SEPARATOR))


@dataclass(frozen=True)
class Allocation:
    map_name: str
    key_hash: str
    value: int


def growth_bound(prefix: Sequence[Func]) -> Fraction:
    """max_i max_l |f_i(e_l)|^{-1} * maxsupp f_d."""
    smallest = min(abs(v) for f in prefix for _, v in f.base)
    return Fraction(1) / smallest * prefix[-1].base.maxsupp


def _is_coordinate(f: Func) -> bool:
    return len(f.base) == 1 and abs(f.base.entries[0][1]) == 1


class CodingRegistry:
    """
    Persistent realizations of sigma1 and sigma.

    Allocation is serialized by a lock; committed entries can be read
    concurrently. A frozen registry answers lookups and raises on allocation.
    """

    def __init__(self, sigma1: Optional[Dict[str, int]] = None, sigma: Optional[Dict[str, int]] = None,
                 frozen: bool = False):
        self._maps: Dict[str, Dict[str, int]] = {SIGMA1: dict(sigma1 or {}), SIGMA: dict(sigma or {})}
        self._lock = threading.Lock()
        self.frozen = frozen
        self.log: List[Allocation] = []
        self._parsed: Dict[str, Tuple[Func, ...]] = {}
        self._certified: Dict[str, Tuple[Func, ...]] = {}

    def freeze(self) -> "CodingRegistry":
        self.frozen = True
        return self

    def snapshot(self) -> "CodingRegistry":
        """Frozen copy of the committed entries."""
        copy = CodingRegistry(self._maps[SIGMA1], self._maps[SIGMA], frozen=True)
        copy._certified = dict(self._certified)
        return copy

    def scratch(self) -> "CodingRegistry":
        """Unfrozen in-memory copy; its allocations never reach the registry files."""
        copy = CodingRegistry(self._maps[SIGMA1], self._maps[SIGMA])
        copy._certified = dict(self._certified)
        return copy

    def __len__(self):
        return len(self._maps[SIGMA1]) + len(self._maps[SIGMA])

    def lookup(self, map_name: str, prefix: Sequence[Func]) -> Optional[int]:
        return self._maps[map_name].get(prefix_key(prefix))

    def sigma1_lookup(self, prefix: Sequence[Func]) -> Optional[int]:
        return self.lookup(SIGMA1, prefix)

    def sigma_lookup(self, prefix: Sequence[Func]) -> Optional[int]:
        return self.lookup(SIGMA, prefix)

    def _allocate(self, map_name: str, key: str, lower: int, accept=lambda v: True) -> int:
        with self._lock:
            table = self._maps[map_name]
            if key in table:
                return table[key]
            if self.frozen:
                raise RegistryFrozenError(f"Registry is read-only; cannot allocate {map_name} for {_key_hash(key)}")
            used = set(table.values())
            value = lower + 1 if (lower + 1) % 2 == 0 else lower + 2
            while value in used or not accept(value):
                value += 2
            table[key] = value
            allocation = Allocation(map_name, _key_hash(key), value)
            self.log.append(allocation)
            logger.info(f"Allocated {map_name}[{allocation.key_hash}] = {value}")
            return value

    def sigma1_assign(self, prefix: Sequence[Func]) -> int:
        """
        sigma1 value of a special-sequence prefix, allocating on first use.

        Args:
            prefix: G1 functionals with strictly increasing indices and successive supports

        Returns:
            An even natural, strictly larger than the parent prefix's value and ind(f_i)
        """
        prefix = tuple(prefix)
        if not prefix:
            raise PreconditionError("sigma1 is defined on nonempty prefixes")
        for f in prefix:
            if f.kind != TagKind.G1:
                raise PreconditionError(f"sigma1 prefixes consist of G1 functionals, got {f.kind.value}")
        for f, g in zip(prefix, prefix[1:]):
            if f.index >= g.index or f.base.maxsupp >= g.base.minsupp:
                raise PreconditionError("sigma1 prefix must have increasing indices and successive supports")
        key = prefix_key(prefix)
        existing = self._maps[SIGMA1].get(key)
        if existing is not None:
            return existing
        lower = prefix[-1].index
        if len(prefix) > 1:
            lower = max(lower, self.sigma1_assign(prefix[:-1]))
        return self._allocate(SIGMA1, key, lower)

    def sigma_assign(self, prefix: Sequence[Func], profile: ParameterProfile) -> int:
        """
        sigma value of a rational block sequence, allocating on first use.

        The value v is the least unused even natural with m_{2v} > growth_bound(prefix)^2.
        """
        prefix = tuple(prefix)
        if not prefix or any(f.is_zero for f in prefix):
            raise PreconditionError("sigma is defined on nonempty sequences of nonzero functionals")
        for f, g in zip(prefix, prefix[1:]):
            if f.base.maxsupp >= g.base.minsupp:
                raise PreconditionError("sigma prefix must be a block sequence")
        key = prefix_key(prefix)
        if all(f.analysis is not None or _is_coordinate(f) for f in prefix):
            self._certified.setdefault(key, prefix)
        existing = self._maps[SIGMA].get(key)
        if existing is not None:
            return existing
        bound = growth_bound(prefix) ** 2
        return self._allocate(SIGMA, key, 0, accept=lambda v: profile.m(2 * v) > bound)

    def certified(self, prefix: Sequence[Func]) -> Optional[Tuple[Func, ...]]:
        """
        The entries of a stored sigma prefix with their tree analyses.

        Analyses are kept in memory for prefixes passed to sigma_assign in this
        process; registry files store keys only. Coordinate entries may come
        without an analysis.
        """
        return self._certified.get(prefix_key(prefix))

    def items(self, map_name: str) -> List[Tuple[Tuple[Func, ...], int]]:
        """Stored (prefix, value) pairs sorted by key."""
        result = []
        for key, value in sorted(self._maps[map_name].items()):
            if key not in self._parsed:
                self._parsed[key] = parse_prefix_key(key)
            result.append((self._parsed[key], value))
        return result

    def check_invariants(self, profile: Optional[ParameterProfile] = None) -> List[str]:
        """
        Violations of injectivity, sigma1 prefix monotonicity and sigma growth.

        Returns:
            Human-readable violation messages (empty when all hold)
        """
        problems = []
        for map_name, table in self._maps.items():
            if len(set(table.values())) != len(table):
                problems.append(f"{map_name} is not injective")
            if any(v % 2 for v in table.values()):
                problems.append(f"{map_name} has odd values")
        sigma1 = self._maps[SIGMA1]
        for prefix, value in self.items(SIGMA1):
            if len(prefix) > 1:
                parent = sigma1.get(prefix_key(prefix[:-1]))
                if parent is not None and value <= parent:
                    problems.append(f"sigma1 not monotone at {_key_hash(prefix_key(prefix))}")
        if profile is not None:
            for prefix, value in self.items(SIGMA):
                if profile.m(2 * value) <= growth_bound(prefix) ** 2:
                    problems.append(f"sigma growth fails at {_key_hash(prefix_key(prefix))}")
        return problems

    def dump(self, map_name: str) -> str:
        lines = sorted(f"{_key_hash(key)}\t{key}\t{value}" for key, value in self._maps[map_name].items())
        return "".join(line + "\n" for line in lines)

    def dump_canonical(self) -> str:
        return f"# {SIGMA1}\n{self.dump(SIGMA1)}# {SIGMA}\n{self.dump(SIGMA)}"

    def save(self, sigma1_path: Path, sigma_path: Path) -> None:
        for map_name, path in ((SIGMA1, sigma1_path), (SIGMA, sigma_path)):
            path = Path(path)
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(self.dump(map_name))
            logger.info(f"Registry {map_name} saved: {path} ({len(self._maps[map_name])} entries)")

    @staticmethod
    def _read(path: Path) -> Dict[str, int]:
        table: Dict[str, int] = {}
        if not path.exists():
            logger.warning(f"Registry file not found, starting empty: {path}")
            return table
        for lineno, line in enumerate(path.read_text().splitlines(), start=1):
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise ParseError(f"{path}:{lineno}: expected 3 tab separated fields")
            key_hash, key, value = parts
            if _key_hash(key) != key_hash:
                raise ParseError(f"{path}:{lineno}: key hash mismatch")
            table[key] = int(value)
        return table

    @classmethod
    def load(cls, sigma1_path: Path, sigma_path: Path, frozen: bool = True) -> "CodingRegistry":
        registry = cls(cls._read(Path(sigma1_path)), cls._read(Path(sigma_path)), frozen=frozen)
        logger.info(f"Registry loaded ({len(registry)} entries, frozen={frozen})")
        return registry

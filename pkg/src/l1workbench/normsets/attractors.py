"""
Attractor sequences and the HI special sequences.

An attractor sequence (f_1, ..., f_d), d <= n_{2j-1}, is a block sequence whose
odd entries are results of even operations with weights fixed by sigma and
whose even entries are coordinate functionals e*_lambda with lambda drawn from
Lambda_{sigma(f_1, ..., f_{2i-1})}. HI special sequences replace the even
coordinate entries by operation results of weight m_{2 sigma(...)}.
"""
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Callable, List, Optional, Sequence, Tuple

from l1workbench.spaces.coding import CodingRegistry, in_n1, lambda_elements, lambda_index
from l1workbench.spaces.linspace import Func, TagKind
from l1workbench.spaces.profiles import ParameterProfile
from l1workbench.utils.errors import PreconditionError

logger = logging.getLogger(__name__)


class AttractorFailure(str, Enum):
    EMPTY = "empty sequence"
    NOT_BLOCK = "not a rational block sequence"
    LENGTH = "longer than n_{2j-1}"
    FIRST = "f_1 is not an operation result of index 2*j1 with j1 in N1"
    GROWTH = "m_{2j1} <= n_{2j-1}^3"
    SIGMA = "sigma not realized for a prefix"
    ODD_WEIGHT = "odd entry weight does not follow sigma"
    EVEN_ENTRY = "even entry has the wrong shape"
    LAMBDA = "even entry outside Lambda_sigma"


@dataclass(frozen=True)
class AttractorCheck:
    ok: bool
    reason: Optional[AttractorFailure] = None
    position: Optional[int] = None

    def __bool__(self):
        return self.ok

    def describe(self) -> str:
        if self.ok:
            return "accepted"
        where = f" at entry {self.position}" if self.position is not None else ""
        return f"{self.reason.value}{where}"


def is_operation_result(f: Func, index: Optional[int] = None) -> bool:
    if f.kind != TagKind.TYPE_I or f.index is None:
        return False
    return index is None or f.index == index


def _check_chain(seq: Sequence[Func], j: int, registry: CodingRegistry, profile: ParameterProfile,
                 even_entry: Callable[[Func, int], Optional[AttractorFailure]]) -> AttractorCheck:
    seq = tuple(seq)
    if not seq:
        return AttractorCheck(False, AttractorFailure.EMPTY)
    for position, f in enumerate(seq, start=1):
        if f.is_zero:
            return AttractorCheck(False, AttractorFailure.NOT_BLOCK, position)
    for position, (f, g) in enumerate(zip(seq, seq[1:]), start=2):
        if f.base.maxsupp >= g.base.minsupp:
            return AttractorCheck(False, AttractorFailure.NOT_BLOCK, position)
    if len(seq) > profile.n(2 * j - 1):
        return AttractorCheck(False, AttractorFailure.LENGTH)
    first = seq[0]
    if not is_operation_result(first) or first.index % 2 or not in_n1(first.index // 2):
        return AttractorCheck(False, AttractorFailure.FIRST, 1)
    if profile.m(first.index) <= profile.n(2 * j - 1) ** 3:
        return AttractorCheck(False, AttractorFailure.GROWTH, 1)
    for position in range(2, len(seq) + 1):
        coded = registry.sigma_lookup(seq[:position - 1])
        if coded is None:
            return AttractorCheck(False, AttractorFailure.SIGMA, position)
        f = seq[position - 1]
        if position % 2:
            if not is_operation_result(f, 2 * coded):
                return AttractorCheck(False, AttractorFailure.ODD_WEIGHT, position)
        else:
            failure = even_entry(f, coded)
            if failure is not None:
                return AttractorCheck(False, failure, position)
    return AttractorCheck(True)


def _coordinate_entry(f: Func, coded: int) -> Optional[AttractorFailure]:
    if len(f.base) != 1 or f.base.entries[0][1] != 1:
        return AttractorFailure.EVEN_ENTRY
    if lambda_index(f.base.minsupp) != coded:
        return AttractorFailure.LAMBDA
    return None


def _operation_entry(f: Func, coded: int) -> Optional[AttractorFailure]:
    if not is_operation_result(f, 2 * coded):
        return AttractorFailure.EVEN_ENTRY
    return None


def check_attractor_sequence(seq: Sequence[Func], j: int, registry: CodingRegistry,
                             profile: ParameterProfile) -> AttractorCheck:
    """
    Verify the n_{2j-1}-attractor conditions, clause by clause.

    Entries are judged by their tags; membership of each entry in the norming
    set is the job of the certificate replay.
    """
    return _check_chain(seq, j, registry, profile, _coordinate_entry)


def check_hi_special_sequence(seq: Sequence[Func], j: int, registry: CodingRegistry,
                              profile: ParameterProfile) -> AttractorCheck:
    """Like check_attractor_sequence, with even entries of weight m_{2 sigma(f_1, ..., f_{2i-1})}."""
    return _check_chain(seq, j, registry, profile, _operation_entry)


def least_first_index(j: int, profile: ParameterProfile) -> int:
    """Least j1 in N1 with m_{2j1} > n_{2j-1}^3."""
    bound = profile.n(2 * j - 1) ** 3
    j1 = 1
    while profile.m(2 * j1) <= bound:
        j1 += 2
    return j1


def first_lambda_after(coded: int, after: int, in_l: Optional[bool] = None) -> int:
    """Smallest element of Lambda_coded above `after` (optionally inside or outside L)."""
    return next(lambda_elements(coded, after + 1, in_l))


def build_attractor_sequence(first: Func, length: int, j: int, registry: CodingRegistry,
                             profile: ParameterProfile,
                             odd_entry: Callable[[int, Tuple[Func, ...]], Func],
                             even_entry: Optional[Callable[[int, Tuple[Func, ...]], Func]] = None
                             ) -> Tuple[Func, ...]:
    """
    Grow an attractor sequence from f_1, allocating sigma on each prefix.

    Args:
        first: Operation result of index 2*j1 with j1 in N1 and m_{2j1} > n_{2j-1}^3
        length: Number of entries (at most n_{2j-1})
        odd_entry: Builds f_{2i-1} from (2*sigma(prefix), prefix)
        even_entry: Builds f_{2i} from (sigma(prefix), prefix); defaults to the
            coordinate functional of the least admissible lambda

    Returns:
        The sequence, accepted by check_attractor_sequence
    """
    if length > profile.n(2 * j - 1):
        raise PreconditionError(f"Attractor sequences have at most n_{2 * j - 1} = {profile.n(2 * j - 1)} entries")
    if even_entry is None:
        def even_entry(coded: int, prefix: Tuple[Func, ...]) -> Func:
            return Func.coordinate(first_lambda_after(coded, prefix[-1].base.maxsupp))
    seq: List[Func] = [first]
    while len(seq) < length:
        prefix = tuple(seq)
        coded = registry.sigma_assign(prefix, profile)
        if len(seq) % 2:
            entry = even_entry(coded, prefix)
        else:
            entry = odd_entry(2 * coded, prefix)
        if entry.base.minsupp <= prefix[-1].base.maxsupp:
            raise PreconditionError("Attractor entries must be successive")
        seq.append(entry)
    logger.debug(f"Built attractor sequence of length {len(seq)} for j={j}")
    return tuple(seq)


def check_attractor_tree_property(s: Sequence[Func], t: Sequence[Func]) -> bool:
    """
    Two attractor sequences agree up to some i0 and afterwards share no entry,
    no odd-entry weight and no even entry.
    """
    s, t = tuple(s), tuple(t)
    i0 = 0
    while i0 < min(len(s), len(t)) and s[i0] == t[i0]:
        i0 += 1
    for i in range(i0, len(s)):
        for r in range(i0, len(t)):
            if s[i] == t[r]:
                return False
            if i > i0 and r > i0 and i % 2 == 0 and r % 2 == 0 and s[i].weight == t[r].weight:
                return False
    return True

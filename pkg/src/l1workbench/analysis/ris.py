"""
Rapidly increasing sequences.

A (C, eps)-RIS is a block sequence (x_k) with an increasing index sequence
(j_k) such that
  a) ||x_k|| <= 1,
  b) m_{2j_1}^{-1/2} < eps and #ran(x_k) m_{2j_{k+1}}^{-1/2} < eps,
  c) |f(x_k)| <= C/w(f) for type I f in K with w(f) < m_{2j_k}.

Conditions a) and b) are decided exactly. Condition c) quantifies over all of
K: it is exact when the closure-wide type I bounds already settle it and
sampled otherwise, and every verdict says which.
"""
import logging
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence

from l1workbench.norms.extension import type_one_bounds
from l1workbench.norms.ground_norm import NormResult
from l1workbench.normsets.rules import RuleSet
from l1workbench.spaces.coding import CodingRegistry
from l1workbench.spaces.linspace import Func, TagKind, Vec00, successive
from l1workbench.spaces.profiles import ParameterProfile

logger = logging.getLogger(__name__)


class Granularity(str, Enum):
    EXACT = "exact"
    SAMPLED = "sampled"
    MEASURED = "measured"


@dataclass
class ConditionResult:
    holds: bool
    granularity: Granularity
    detail: str = ""

    def to_json(self) -> dict:
        return {"holds": self.holds, "granularity": self.granularity.value, "detail": self.detail}


@dataclass
class RISWitness:
    vectors: List[Vec00]
    C: Fraction
    eps: Fraction
    indices: List[int]
    conditions: Dict[str, ConditionResult] = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return all(c.holds for c in self.conditions.values())

    @property
    def failed(self) -> Optional[str]:
        for name in ("a", "b", "c"):
            if name in self.conditions and not self.conditions[name].holds:
                return name
        return None

    def j(self, k: int) -> Optional[int]:
        """j_k, 1-based; None beyond the sequence."""
        return self.indices[k - 1] if 1 <= k <= len(self.indices) else None

    def to_json(self) -> dict:
        return {
            "vectors": [str(x) for x in self.vectors],
            "C": str(self.C),
            "eps": str(self.eps),
            "indices": self.indices,
            "conditions": {name: c.to_json() for name, c in sorted(self.conditions.items())},
        }


def _range_size(x: Vec00) -> int:
    return x.maxsupp - x.minsupp + 1


def check_growth(xs: Sequence[Vec00], eps: Fraction, indices: Sequence[int],
                 profile: ParameterProfile) -> ConditionResult:
    """Condition b), through squares: m_{2j} > eps^{-2} and #ran^2 < eps^2 m_{2j_{k+1}}."""
    if profile.m(2 * indices[0]) * eps ** 2 <= 1:
        return ConditionResult(False, Granularity.EXACT, "m_{2j_1}^{-1/2} >= eps")
    for k, x in enumerate(xs[:-1], start=1):
        if _range_size(x) ** 2 >= eps ** 2 * profile.m(2 * indices[k]):
            return ConditionResult(False, Granularity.EXACT, f"#ran(x_{k}) m_{{2j_{k + 1}}}^{{-1/2}} >= eps")
    return ConditionResult(True, Granularity.EXACT)


def check_unit_ball(xs: Sequence[Vec00], oracle: Callable[[Vec00], NormResult]) -> ConditionResult:
    """Condition a) from norm brackets."""
    undecided = []
    for k, x in enumerate(xs, start=1):
        result = oracle(x)
        if result.lower > 1:
            return ConditionResult(False, Granularity.EXACT, f"||x_{k}|| >= {result.lower} > 1")
        if result.upper > 1:
            undecided.append(k)
    if undecided:
        return ConditionResult(True, Granularity.MEASURED, f"upper bounds exceed 1 at k in {undecided}")
    return ConditionResult(True, Granularity.EXACT)


def check_type_one_actions(xs: Sequence[Vec00], C: Fraction, indices: Sequence[int], rules: RuleSet,
                           profile: ParameterProfile, registry: CodingRegistry,
                           sample: Sequence[Func] = (), depth: int = 2) -> ConditionResult:
    """Condition c): closure-wide bounds first, then the sample and supplied certificates."""
    sampled = False
    for k, x in enumerate(xs, start=1):
        largest = 2 * indices[k - 1] - 1
        bounds = type_one_bounds(x, rules, profile, registry, depth=depth, max_index=largest)
        for j in range(1, largest + 1):
            lower, upper = bounds[j]
            limit = C / profile.m(j)
            if lower > limit:
                return ConditionResult(False, Granularity.EXACT,
                                       f"a weight m_{j} functional reaches {lower} > {limit} on x_{k}")
            if upper > limit:
                sampled = True
        for f in sample:
            if f.kind != TagKind.TYPE_I or f.weight >= profile.m(2 * indices[k - 1]):
                continue
            if abs(f(x)) > C / f.weight:
                return ConditionResult(False, Granularity.SAMPLED, f"{f} violates the bound on x_{k}")
    if sampled:
        return ConditionResult(True, Granularity.SAMPLED, f"checked over {len(sample)} functionals")
    return ConditionResult(True, Granularity.EXACT)


def ris_check(xs: Sequence[Vec00], C: Fraction, eps: Fraction, indices: Sequence[int],
              profile: ParameterProfile, oracle: Callable[[Vec00], NormResult],
              rules: Optional[RuleSet] = None, registry: Optional[CodingRegistry] = None,
              sample: Sequence[Func] = ()) -> RISWitness:
    """
    Evaluate the three RIS conditions.

    Args:
        xs: Block sequence
        C: Constant of condition c)
        eps: Growth parameter of condition b)
        indices: Strictly increasing (j_k), one per vector
        oracle: Norm oracle for condition a)
        rules: Rule set whose type I functionals condition c) ranges over (K by default)
        sample: Type I functionals checked on top of the closure-wide bounds
    """
    xs = list(xs)
    witness = RISWitness(xs, Fraction(C), Fraction(eps), list(indices))
    if len(indices) != len(xs) or any(a >= b for a, b in zip(indices, indices[1:])):
        witness.conditions["b"] = ConditionResult(False, Granularity.EXACT,
                                                  "indices must be strictly increasing, one per vector")
        return witness
    if not successive(xs) or any(x.is_zero for x in xs):
        witness.conditions["a"] = ConditionResult(False, Granularity.EXACT, "not a block sequence")
        return witness
    rules = rules or RuleSet.k_xi()
    registry = registry if registry is not None else CodingRegistry()
    witness.conditions["a"] = check_unit_ball(xs, oracle)
    witness.conditions["b"] = check_growth(xs, witness.eps, indices, profile)
    witness.conditions["c"] = check_type_one_actions(xs, witness.C, indices, rules, profile, registry, sample)
    logger.info(f"ris_check: {'holds' if witness.holds else f'fails at {witness.failed}'} "
                f"({', '.join(f'{n}:{c.granularity.value}' for n, c in sorted(witness.conditions.items()))})")
    return witness

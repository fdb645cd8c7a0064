"""
Strategies for both players.

Strategies are deterministic functions of the game state; randomized S
strategies draw from a generator seeded by (seed, turn).
"""
import itertools
import logging
import random
from fractions import Fraction
from typing import Optional

from l1workbench.combinatorics.families import is_maximal, member
from l1workbench.combinatorics.ordinal import Ordinal
from l1workbench.games.engine import GameState, SMove, SMoveKind, SStrategy, VMove, VStrategy
from l1workbench.games.spaces import GameSpace
from l1workbench.normsets.ground import g1_functional
from l1workbench.spaces.coding import CodingRegistry
from l1workbench.spaces.linspace import Vec00
from l1workbench.spaces.profiles import ParameterProfile
from l1workbench.utils.errors import PreconditionError

logger = logging.getLogger(__name__)

S_STRATEGIES = ("tail", "mask", "generators")
V_STRATEGIES = ("unit", "special")
SEARCH_LIMIT = 10000


def s_strategy_tail(space: GameSpace) -> SStrategy:
    """The tail beyond V's last support; in the l2-sum space, beyond the l1-block containing it."""
    def move(state: GameState) -> SMove:
        return SMove(SMoveKind.TAIL, cutoff=space.cutoff(state.last_maxsupp))
    return move


def s_strategy_mask(seed: int = 0, density: float = 0.5, horizon: int = 64) -> SStrategy:
    """A random subsequence of the next `horizon` coordinates, never empty."""
    if not 0 < density <= 1 or horizon < 1:
        raise PreconditionError("mask density must lie in (0, 1] and the horizon be positive")

    def move(state: GameState) -> SMove:
        rng = random.Random(seed * 1_000_003 + len(state.moves))
        start = state.last_maxsupp + 1
        coordinates = [p for p in range(start, start + horizon) if rng.random() < density]
        if not coordinates:
            coordinates = [start + rng.randrange(horizon)]
        return SMove(SMoveKind.MASK, coordinates=tuple(coordinates))
    return move


def s_strategy_generators(width: int = 2, count: int = 8) -> SStrategy:
    """Span of `count` consecutive flat blocks of `width` coordinates."""
    def move(state: GameState) -> SMove:
        start = state.last_maxsupp + 1
        blocks = tuple(Vec00.indicator(range(start + k * width, start + (k + 1) * width)) for k in range(count))
        return SMove(SMoveKind.GENERATORS, generators=blocks)
    return move


def v_strategy_unit(space: Optional[GameSpace] = None, start: int = 1) -> VStrategy:
    """
    The first admissible unit vector at or after `start`.

    On generator lists V plays the first admissible generator, normalized by
    the space's oracle when its norm is exact and rational, and resigns
    otherwise.
    """
    def move(state: GameState, smove: SMove) -> Optional[VMove]:
        family, minima = state.family, state.minima
        if smove.kind == SMoveKind.GENERATORS:
            for g in smove.generators:
                if g.minsupp <= state.last_maxsupp or g.minsupp < start:
                    continue
                if not member(family, minima + (g.minsupp,)):
                    continue
                if space is None:
                    return None
                result = space.oracle(g)
                if not result.exact or not result.lower.is_rational:
                    return None
                done = is_maximal(family, minima + (g.minsupp,))
                return VMove(g.scale(1 / result.lower.to_fraction()), None, done)
            return None
        candidates = smove.available(max(state.last_maxsupp, start - 1))
        for p in itertools.islice(candidates, SEARCH_LIMIT):
            if member(family, minima + (p,)):
                return VMove(Vec00.unit(p), None, is_maximal(family, minima + (p,)))
        return None
    return move


def v_strategy_special(xi, registry: CodingRegistry, profile: ParameterProfile, max_width: int = 16,
                       exact_width: bool = False) -> VStrategy:
    """
    Grow a special sequence inside S's subspaces.

    At turn i V picks the next index j_i (j_1 = 1, then sigma1 of the sequence
    so far), the first admissible coordinate p of S's subspace and the
    following coordinates up to w = min(n_{2j_i-1}, max_width) in total, and
    plays x_i = (m_{2j_i-1}^2 / #F_i) sum_{k in F_i} e_k with the G1 witness
    f_i = m_{2j_i-1}^{-2} sum_{k in F_i} e_k^*, so f_i(x_i) = 1.

    Args:
        exact_width: Resign unless S offers n_{2j_i-1} coordinates
    """
    xi = Ordinal.of(xi)

    def move(state: GameState, smove: SMove) -> Optional[VMove]:
        if smove.kind == SMoveKind.GENERATORS:
            logger.info("v_strategy_special: generator lists are not subsequence games, resigning")
            return None
        family, minima = state.family, state.minima
        previous = [f for f in state.functionals if f is not None]
        j = registry.sigma1_assign(previous) if previous else 1
        size = 2 * j - 1
        width = max_width if profile.n_at_least(size, max_width) else profile.n(size)
        if exact_width:
            width = profile.n(size)
        candidates = smove.available(state.last_maxsupp)
        p = next((q for q in itertools.islice(candidates, SEARCH_LIMIT) if member(family, minima + (q,))), None)
        if p is None:
            logger.info("v_strategy_special: no admissible coordinate offered, resigning")
            return None
        support = [p] + list(itertools.islice(candidates, width - 1))
        if exact_width and len(support) < width:
            logger.info(f"v_strategy_special: {len(support)} coordinates offered, n_{size} = {width} needed; resigning")
            return None
        f = g1_functional(j, support, profile)
        x = Vec00.indicator(support, Fraction(profile.m(size) ** 2, len(support)))
        return VMove(x, f, is_maximal(family, minima + (p,)))
    return move


def make_s_strategy(name: str, space: GameSpace, seed: int = 0) -> SStrategy:
    if name == "tail":
        return s_strategy_tail(space)
    if name == "mask":
        return s_strategy_mask(seed)
    if name == "generators":
        return s_strategy_generators()
    raise PreconditionError(f"Unknown S strategy '{name}', expected one of {', '.join(S_STRATEGIES)}")


def make_v_strategy(name: str, space: GameSpace, xi, registry: CodingRegistry,
                    profile: ParameterProfile, start: int = 1) -> VStrategy:
    if name == "unit":
        return v_strategy_unit(space, start)
    if name == "special":
        return v_strategy_special(xi, registry, profile)
    raise PreconditionError(f"Unknown V strategy '{name}', expected one of {', '.join(V_STRATEGIES)}")

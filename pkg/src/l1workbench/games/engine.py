"""
The S_xi-game.

S chooses a block subspace, V answers with a block vector in it, and play
continues until V declares that the minima of its vectors form a maximal
member of S_xi. V wins when the declaration holds and the sequence is
C-equivalent to the unit vector basis of l1^k, i.e. ||sum a_i x_i|| >=
C^{-1} sum |a_i| for all scalars.

S-moves are tail cutoffs, subsequence masks or finite generator lists. The
referee checks every V-move as it is made; `verify_transcript` repeats the
same checks on a stored transcript without the strategies.
"""
import itertools
import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Callable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from l1workbench.analysis.spreading import set_bracket
from l1workbench.combinatorics.families import FamilySpec, is_maximal, member, schreier
from l1workbench.combinatorics.ordinal import Ordinal, parse_ordinal
from l1workbench.games.spaces import GameSpace
from l1workbench.norms.ground_norm import NormResult
from l1workbench.norms.values import Surd, render
from l1workbench.spaces.linspace import Func, Vec00, canonical_serialize, parse_func, parse_vector, successive
from l1workbench.utils.errors import IllegalMoveError, ParseError, PreconditionError

logger = logging.getLogger(__name__)

DEFAULT_MOVE_CAP = 64
# Largest sequence whose l1 constant is bracketed by the cross-polytope search.
BRACKET_LIMIT = 5


class SMoveKind(str, Enum):
    TAIL = "tail"
    MASK = "mask"
    GENERATORS = "generators"


@dataclass(frozen=True)
class SMove:
    kind: SMoveKind
    cutoff: int = 0
    coordinates: Tuple[int, ...] = ()
    generators: Tuple[Vec00, ...] = ()

    def contains(self, x: Vec00) -> bool:
        """Membership of x in the chosen subspace."""
        if x.is_zero:
            return True
        if self.kind == SMoveKind.TAIL:
            return x.minsupp > self.cutoff
        if self.kind == SMoveKind.MASK:
            return set(x.support) <= set(self.coordinates)
        covered = set()
        for g in self.generators:
            piece = x.restrict(g.range)
            covered.update(piece.support)
            if piece.is_zero:
                continue
            if set(piece.support) != set(g.support):
                return False
            ratio = piece.coeff(g.minsupp) / g.coeff(g.minsupp)
            if piece != g.scale(ratio):
                return False
        return covered == set(x.support)

    def available(self, after: int) -> Iterator[int]:
        """Coordinates beyond `after` that a unit vector may use; unbounded for tails."""
        if self.kind == SMoveKind.TAIL:
            return itertools.count(max(after, self.cutoff) + 1)
        if self.kind == SMoveKind.MASK:
            return (p for p in self.coordinates if p > after)
        return (g.minsupp for g in self.generators if len(g) == 1 and g.minsupp > after)

    def to_json(self) -> dict:
        data = {"player": "S", "kind": self.kind.value}
        if self.kind == SMoveKind.TAIL:
            data["cutoff"] = self.cutoff
        elif self.kind == SMoveKind.MASK:
            data["coordinates"] = list(self.coordinates)
        else:
            data["generators"] = [str(g) for g in self.generators]
        return data

    @classmethod
    def from_json(cls, data: dict) -> "SMove":
        kind = SMoveKind(data["kind"])
        return cls(kind, int(data.get("cutoff", 0)), tuple(int(p) for p in data.get("coordinates", ())),
                   tuple(parse_vector(g) for g in data.get("generators", ())))


@dataclass(frozen=True)
class VMove:
    """
    A block vector, optionally with a functional f certifying f(x) = 1, and
    V's claim that the game is complete.
    """

    vector: Vec00
    functional: Optional[Func] = None
    done: bool = False

    def to_json(self) -> dict:
        return {
            "player": "V",
            "vector": str(self.vector),
            "functional": canonical_serialize(self.functional) if self.functional is not None else None,
            "done": self.done,
        }

    @classmethod
    def from_json(cls, data: dict) -> "VMove":
        functional = parse_func(data["functional"]) if data.get("functional") else None
        return cls(parse_vector(data["vector"]), functional, bool(data.get("done", False)))


Move = Union[SMove, VMove]


class Verdict(str, Enum):
    V = "V"
    S = "S"
    UNDECIDED = "undecided"


@dataclass
class GameState:
    xi: Ordinal
    moves: List[Move] = field(default_factory=list)

    @property
    def family(self) -> FamilySpec:
        return schreier(self.xi)

    @property
    def v_moves(self) -> List[VMove]:
        return [m for m in self.moves if isinstance(m, VMove)]

    @property
    def vectors(self) -> List[Vec00]:
        return [m.vector for m in self.v_moves]

    @property
    def functionals(self) -> List[Optional[Func]]:
        return [m.functional for m in self.v_moves]

    @property
    def minima(self) -> Tuple[int, ...]:
        return tuple(x.minsupp for x in self.vectors)

    @property
    def last_maxsupp(self) -> int:
        vectors = self.vectors
        return vectors[-1].maxsupp if vectors else 0


SStrategy = Callable[[GameState], SMove]
VStrategy = Callable[[GameState, SMove], Optional[VMove]]


@dataclass
class GameTranscript:
    """
    Attributes:
        lower: Certified lower bound on min ||sum a_i x_i|| over sum |a_i| = 1
        upper: Upper bound on the same minimum (uniform coefficients)
    """

    xi: Ordinal
    C: Fraction
    space: str
    moves: List[Move]
    verdict: Verdict
    reason: str = ""
    resigned: bool = False
    lower: Optional[Surd] = None
    upper: Optional[Surd] = None

    @property
    def vectors(self) -> List[Vec00]:
        return [m.vector for m in self.moves if isinstance(m, VMove)]

    def to_json(self) -> dict:
        return {
            "xi": str(self.xi),
            "C": str(self.C),
            "space": self.space,
            "moves": [m.to_json() for m in self.moves],
            "verdict": self.verdict.value,
            "reason": self.reason,
            "resigned": self.resigned,
            "lower": render(self.lower) if self.lower is not None else None,
            "upper": render(self.upper) if self.upper is not None else None,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    @classmethod
    def from_json(cls, data: dict) -> "GameTranscript":
        """Rebuild a transcript; the bounds are not restored and are recomputed on verification."""
        try:
            moves: List[Move] = [SMove.from_json(m) if m["player"] == "S" else VMove.from_json(m)
                                 for m in data["moves"]]
            return cls(parse_ordinal(data["xi"]), Fraction(data["C"]), data["space"], moves,
                       Verdict(data["verdict"]), data.get("reason", ""), bool(data.get("resigned", False)))
        except (KeyError, ValueError, TypeError) as e:
            raise ParseError(f"Invalid transcript: {e}")


def _check_s_move(smove: SMove) -> Optional[str]:
    if smove.kind == SMoveKind.TAIL and smove.cutoff < 0:
        return "negative tail cutoff"
    if smove.kind == SMoveKind.MASK:
        if not smove.coordinates or list(smove.coordinates) != sorted(set(smove.coordinates)):
            return "mask must be a nonempty increasing list"
        if smove.coordinates[0] < 1:
            return "mask coordinates start at 1"
    if smove.kind == SMoveKind.GENERATORS:
        if not smove.generators or any(g.is_zero for g in smove.generators):
            return "generator lists are nonempty lists of nonzero vectors"
        if not successive(smove.generators):
            return "generators must be a block sequence"
    return None


def _check_v_move(state: GameState, smove: SMove, vmove: VMove, space: GameSpace) -> Optional[str]:
    """Reason the V-move is illegal, or None."""
    x = vmove.vector
    if x.is_zero:
        return "zero vector"
    if x.minsupp <= state.last_maxsupp:
        return f"not a block successor (minsupp {x.minsupp} <= {state.last_maxsupp})"
    if not smove.contains(x):
        return "vector outside the subspace chosen by S"
    if not member(state.family, state.minima + (x.minsupp,)):
        return f"minima {state.minima + (x.minsupp,)} leave S({state.xi})"
    f = vmove.functional
    if f is not None:
        if space.norming is None or not space.norming(f):
            return "functional is not certified in the norming set"
        if f(x) != 1:
            return f"functional takes value {f(x)} != 1"
        if not set(f.support) <= set(range(x.minsupp, x.maxsupp + 1)):
            return "functional reaches outside ran(x)"
        return None
    result = space.oracle(x)
    if result.lower > 1 or result.upper < 1:
        return f"vector is not normalized (norm in [{result.lower}, {result.upper}])"
    return None


def _l1_lower(state: GameState, space: GameSpace) -> Optional[Surd]:
    vectors, functionals = state.vectors, state.functionals
    if not vectors:
        return None
    if all(f is not None for f in functionals) and space.certify is not None:
        if space.certify(functionals):
            # sum sign(a_i) f_i norms, and f_i vanishes on x_j for j != i
            return Surd.of(min(f(x) for f, x in zip(functionals, vectors)))
        return None
    if space.l1_lower is not None:
        return space.l1_lower(vectors)
    if len(vectors) <= BRACKET_LIMIT:
        return set_bracket(vectors, space.oracle, np.random.default_rng(0), restarts=8, steps=8).lower
    return None


def _l1_upper(state: GameState, space: GameSpace) -> Optional[Surd]:
    if any(f is not None for f in state.functionals) or not state.vectors:
        return None
    vectors = state.vectors
    total = Vec00()
    for x in vectors:
        total = total + x
    return space.oracle(total.scale(Fraction(1, len(vectors)))).upper


def _judge(state: GameState, space: GameSpace, C: Fraction, declared: bool,
           resigned: bool) -> Tuple[Verdict, str, Optional[Surd], Optional[Surd]]:
    if resigned:
        return Verdict.S, "V resigned", None, None
    if not declared:
        return Verdict.UNDECIDED, "move cap reached before V declared completion", None, None
    if not is_maximal(state.family, state.minima):
        return Verdict.S, f"declared set {state.minima} is not maximal in S({state.xi})", None, None
    lower, upper = _l1_lower(state, space), _l1_upper(state, space)
    if lower is not None and lower * C >= 1:
        return Verdict.V, f"l1 lower constant {lower} >= 1/C", lower, upper
    if upper is not None and upper * C < 1:
        return Verdict.S, f"uniform average has norm {upper} < 1/C", lower, upper
    return Verdict.UNDECIDED, "the l1 constant is not settled by the certified bounds", lower, upper


def play_game(xi, s_strategy: SStrategy, v_strategy: VStrategy, space: GameSpace, C: Fraction,
              move_cap: int = DEFAULT_MOVE_CAP) -> GameTranscript:
    """
    Play one game.

    Args:
        xi: Order of the Schreier family
        s_strategy: state -> SMove
        v_strategy: (state, SMove) -> VMove, or None to resign
        space: Space the game is played in
        C: Equivalence constant V has to achieve
        move_cap: Maximal number of V-moves

    Raises:
        IllegalMoveError: a strategy produced an illegal move
    """
    C = Fraction(C)
    if C < 1:
        raise PreconditionError(f"Equivalence constants are >= 1, got {C}")
    state = GameState(Ordinal.of(xi))
    declared = resigned = False
    for turn in range(1, move_cap + 1):
        smove = s_strategy(state)
        reason = _check_s_move(smove)
        if reason:
            raise IllegalMoveError(f"Illegal S-move at turn {turn}: {reason}", move=smove)
        state.moves.append(smove)
        vmove = v_strategy(state, smove)
        if vmove is None:
            resigned = True
            logger.info(f"play_game: V resigned at turn {turn}")
            break
        reason = _check_v_move(state, smove, vmove, space)
        if reason:
            raise IllegalMoveError(f"Illegal V-move at turn {turn}: {reason}", move=vmove)
        state.moves.append(vmove)
        if vmove.done:
            declared = True
            break
    verdict, reason, lower, upper = _judge(state, space, C, declared, resigned)
    logger.info(f"play_game: xi={state.xi}, {len(state.vectors)} vectors, verdict {verdict.value} ({reason})")
    return GameTranscript(state.xi, C, space.name, list(state.moves), verdict, reason, resigned, lower, upper)


@dataclass
class ReplayResult:
    ok: bool
    verdict: Optional[Verdict]
    reason: str = ""

    def __bool__(self):
        return self.ok


def verify_transcript(transcript: GameTranscript, space: GameSpace) -> ReplayResult:
    """Re-check every move and recompute the verdict without the strategies."""
    if space.name != transcript.space:
        return ReplayResult(False, None, f"transcript was played in '{transcript.space}', not '{space.name}'")
    state = GameState(transcript.xi)
    pending: Optional[SMove] = None
    declared = False
    for position, move in enumerate(transcript.moves, start=1):
        if declared:
            return ReplayResult(False, None, f"move {position} follows V's declaration")
        if isinstance(move, SMove):
            if pending is not None:
                return ReplayResult(False, None, f"two S-moves in a row at move {position}")
            reason = _check_s_move(move)
            if reason:
                return ReplayResult(False, None, f"move {position}: {reason}")
            pending = move
            state.moves.append(move)
            continue
        if pending is None:
            return ReplayResult(False, None, f"V-move {position} without a preceding S-move")
        reason = _check_v_move(state, pending, move, space)
        if reason:
            return ReplayResult(False, None, f"move {position}: {reason}")
        state.moves.append(move)
        pending = None
        declared = move.done
    if transcript.resigned and (declared or pending is None):
        return ReplayResult(False, None, "a resignation must answer the last S-move")
    verdict, reason, _, _ = _judge(state, space, transcript.C, declared, transcript.resigned)
    if verdict != transcript.verdict:
        return ReplayResult(False, verdict, f"recorded verdict {transcript.verdict.value}, replay gives {verdict.value}")
    return ReplayResult(True, verdict, reason)


def l1_ratio(vectors: Sequence[Vec00], coefficients: Sequence[Fraction],
             oracle: Callable[[Vec00], NormResult]) -> Surd:
    """
    sum |a_i| / ||sum a_i x_i||, exact when the oracle is exact with a single-term value.
    """
    if len(vectors) != len(coefficients) or not vectors:
        raise PreconditionError("l1_ratio needs one coefficient per vector")
    total = Vec00()
    for x, a in zip(vectors, coefficients):
        total = total + x.scale(a)
    result = oracle(total)
    if not result.exact or len(result.lower.terms) > 1:
        raise PreconditionError("l1_ratio needs an exact single-term norm")
    norm_square = result.lower.square()
    if norm_square == 0:
        raise PreconditionError("l1_ratio of a vanishing combination")
    l1 = sum((abs(Fraction(a)) for a in coefficients), Fraction(0))
    return Surd.sqrt(l1 * l1 / norm_square)

"""Tests for the S_xi-game: referee, strategies, verdicts and transcript replay."""
import json
from fractions import Fraction

import pytest

from l1workbench.combinatorics.families import is_maximal, schreier
from l1workbench.games.engine import (
    GameTranscript,
    SMove,
    SMoveKind,
    Verdict,
    VMove,
    l1_ratio,
    play_game,
    verify_transcript,
)
from l1workbench.games.spaces import ground_space, l2sum_space, make_space
from l1workbench.games.strategies import (
    make_s_strategy,
    s_strategy_generators,
    s_strategy_mask,
    s_strategy_tail,
    v_strategy_special,
    v_strategy_unit,
)
from l1workbench.norms.values import Surd
from l1workbench.spaces.linspace import Vec00
from l1workbench.utils.errors import IllegalMoveError, ParseError, PreconditionError


def _l2sum_game(C):
    space = l2sum_space()
    return play_game(1, s_strategy_tail(space), v_strategy_unit(space, start=16), space, Fraction(C))


def test_order_zero_game_is_won_at_once():
    space = l2sum_space()
    transcript = play_game(0, s_strategy_tail(space), v_strategy_unit(space), space, Fraction(1))
    assert transcript.verdict == Verdict.V
    assert transcript.vectors == [Vec00.unit(1)]


def test_l2sum_game_needs_constant_four():
    """V starts in block 6, so 16 vectors land in 16 distinct l1 blocks."""
    won = _l2sum_game(4)
    assert won.verdict == Verdict.V
    assert len(won.vectors) == 16
    assert won.lower == Fraction(1, 4)
    assert l1_ratio(won.vectors, [Fraction(1)] * 16, l2sum_space().oracle) == 4

    lost = _l2sum_game(3)
    assert lost.verdict == Verdict.S
    assert lost.upper == Fraction(1, 4)


def test_tail_strategy_skips_to_the_next_block():
    space = l2sum_space()
    minima = [x.minsupp for x in _l2sum_game(4).vectors]
    assert minima[:3] == [16, 22, 29]
    assert space.cutoff(16) == 21


def test_special_strategy_wins_with_constant_one(mini, registry):
    space = ground_space(mini, registry, 1)
    for seed in range(3):
        transcript = play_game(1, s_strategy_mask(seed), v_strategy_special(1, registry, mini), space,
                               Fraction(1), move_cap=1024)
        assert transcript.verdict == Verdict.V
        minima = tuple(x.minsupp for x in transcript.vectors)
        assert is_maximal(schreier(1), minima)
        assert verify_transcript(transcript, space)


def test_special_strategy_resigns_on_generator_lists(mini, registry):
    space = ground_space(mini, registry, 1)
    transcript = play_game(1, s_strategy_generators(), v_strategy_special(1, registry, mini), space, Fraction(1))
    assert transcript.resigned
    assert transcript.verdict == Verdict.S


def test_unit_strategy_normalizes_generators():
    """The generator on 4..6 fills l1 block 3 and has norm 3."""
    space = l2sum_space()
    transcript = play_game(0, s_strategy_generators(width=3), v_strategy_unit(space, start=4), space, Fraction(1))
    assert transcript.verdict == Verdict.V
    assert transcript.vectors == [Vec00.indicator([4, 5, 6], Fraction(1, 3))]


def test_transcript_json_replay():
    transcript = _l2sum_game(4)
    restored = GameTranscript.from_json(json.loads(transcript.dumps()))
    result = verify_transcript(restored, l2sum_space())
    assert result
    assert result.verdict == Verdict.V

    tampered = json.loads(transcript.dumps())
    tampered["verdict"] = "S"
    assert not verify_transcript(GameTranscript.from_json(tampered), l2sum_space())

    truncated = json.loads(transcript.dumps())
    truncated["moves"] = truncated["moves"][:-1]
    assert not verify_transcript(GameTranscript.from_json(truncated), l2sum_space())

    with pytest.raises(ParseError):
        GameTranscript.from_json({"moves": []})


def test_illegal_v_move_is_rejected():
    space = l2sum_space()

    def cheat(state, smove):
        return VMove(Vec00.unit(1, 2), None, True)

    with pytest.raises(IllegalMoveError) as excinfo:
        play_game(0, s_strategy_tail(space), cheat, space, Fraction(1))
    assert excinfo.value.move == VMove(Vec00.unit(1, 2), None, True)


def test_v_move_outside_the_subspace_is_rejected():
    space = l2sum_space()
    with pytest.raises(IllegalMoveError):
        play_game(0, lambda state: SMove(SMoveKind.TAIL, cutoff=5), lambda state, smove: VMove(Vec00.unit(3)),
                  space, Fraction(1))


def test_subspace_membership():
    mask = SMove(SMoveKind.MASK, coordinates=(2, 5, 7))
    assert mask.contains(Vec00.indicator([2, 7]))
    assert not mask.contains(Vec00.indicator([2, 3]))
    generators = SMove(SMoveKind.GENERATORS, generators=(Vec00.indicator([1, 2]), Vec00.unit(3)))
    assert generators.contains(Vec00.indicator([1, 2], 5))
    assert not generators.contains(Vec00.unit(1))
    assert list(generators.available(0)) == [3]


def test_game_preconditions(registry, micro):
    space = l2sum_space()
    with pytest.raises(PreconditionError):
        play_game(1, s_strategy_tail(space), v_strategy_unit(space), space, Fraction(1, 2))
    with pytest.raises(PreconditionError):
        make_space("banach", micro, registry)
    with pytest.raises(PreconditionError):
        make_s_strategy("random", space)
    with pytest.raises(PreconditionError):
        s_strategy_mask(density=0)


def test_l1_ratio_of_one_block():
    assert l1_ratio([Vec00.unit(16), Vec00.unit(17)], [Fraction(1), Fraction(-1)], l2sum_space().oracle) == 1
    assert l1_ratio([Vec00.unit(1), Vec00.unit(2)], [Fraction(1), Fraction(1)],
                    l2sum_space().oracle) == Surd.sqrt(2)

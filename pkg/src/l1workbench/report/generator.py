"""
Batch suites and report export.

A suite is an ordered list of experiments. Rows run in a thread pool, are
written in row-id order, and a failing experiment is recorded on its row
without stopping the suite. Every random choice is seeded from the config,
so two runs with the same config and registry differ only in wall time.
"""
import itertools
import logging
import random
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from rich.console import Console
from rich.table import Table
from tqdm import tqdm

from l1workbench.analysis.basic_inequality import certify_basic_inequality, ris_average_bounds
from l1workbench.analysis.exact_pairs import attractor_estimates, build_attracting_sequence
from l1workbench.analysis.ris import ris_check
from l1workbench.analysis.separated import tail_index
from l1workbench.combinatorics.families import Compose, is_maximal, member, schreier
from l1workbench.combinatorics.ordinal import Ordinal
from l1workbench.games.engine import Verdict, l1_ratio, play_game
from l1workbench.games.spaces import ground_space, l2sum_space
from l1workbench.games.strategies import s_strategy_mask, s_strategy_tail, v_strategy_special, v_strategy_unit
from l1workbench.norms.dual import dual_norm, grid_dual_lower
from l1workbench.norms.enumeration import MAX_SUPPORT, saturation_by_enumeration
from l1workbench.norms.extension import norm_extension
from l1workbench.norms.extension import oracle as extension_oracle
from l1workbench.norms.ground_norm import norm_ground
from l1workbench.norms.l2sum import block_range, l2sum_result
from l1workbench.norms.values import render
from l1workbench.normsets.auxiliary import sup_norm_violations, w_enumerate
from l1workbench.normsets.builders import random_k_functional
from l1workbench.normsets.ground import XiLike, g1_functional
from l1workbench.normsets.rules import RuleSet, parse_rules
from l1workbench.report.storage import Output, Provenance, ReportRow, append_rows, report_path, value_columns
from l1workbench.spaces.coding import CodingRegistry
from l1workbench.spaces.linspace import Func, FuncTag, Interval, Rule, TagKind, Vec00
from l1workbench.spaces.profiles import PaperProfile, ParameterProfile, make_profile, paper_growth_condition
from l1workbench.utils.config import Config
from l1workbench.utils.errors import PreconditionError, WorkbenchError

logger = logging.getLogger(__name__)

SUITES = ("acceptance", "estimates", "games")
MAX_WORKERS = 4
SPECIAL_MOVE_CAP = 1024
SCHREIER_ORDERS = (1, 2, 3, Ordinal.omega_power(1))
EQUIVALENCE_RULES = ("K", "HI", "W:2", "D")
DUAL_GRID_TOLERANCE = Fraction(1, 1000)

Outputs = Dict[str, Output]


@dataclass
class Experiment:
    experiment: str
    inputs: dict
    run: Callable[[], Outputs]


def _exact(value) -> Output:
    return Output(value, Provenance.EXACT)


def _bound(value) -> Output:
    return Output(value, Provenance.BOUND)


def _measured(value) -> Output:
    return Output(value, Provenance.MEASURED)


def schreier_mismatches(xi: XiLike, N: int, maximal_upto: Optional[int] = None) -> Dict[str, int]:
    """
    Exhaustive checks of S(xi) on subsets of {1..N}: heredity, spreading,
    S(xi+1) = S(1)[S(xi)] and is_maximal against brute force (on subsets of
    {1..maximal_upto}, default N).
    """
    maximal_upto = N if maximal_upto is None else min(N, maximal_upto)
    family, successor = schreier(xi), schreier(xi + 1)
    composed = Compose(schreier(1), family)
    counts = {"hereditary": 0, "spreading": 0, "successor": 0, "maximal": 0}
    subsets = (F for size in range(N + 1) for F in itertools.combinations(range(1, N + 1), size))
    for F in subsets:
        if member(successor, F) != member(composed, F):
            counts["successor"] += 1
        if not member(family, F):
            continue
        for position in range(len(F)):
            if not member(family, F[:position] + F[position + 1:]):
                counts["hereditary"] += 1
        if F and not member(family, F[:-1] + (F[-1] + 1,)):
            counts["spreading"] += 1
        if F and F[-1] <= maximal_upto:
            brute = not any(member(family, tuple(sorted(F + (k,)))) for k in range(1, N + 2) if k not in F)
            if is_maximal(family, F) != brute:
                counts["maximal"] += 1
    return counts


def unit_ris(count: int, profile: ParameterProfile, registry: CodingRegistry, xi=1):
    """The RIS (e_1, ..., e_count) with C = 1, eps = 1/2 and indices 2, 3, ..."""
    xs = [Vec00.unit(k) for k in range(1, count + 1)]
    oracle = lambda x: norm_ground(x, profile, registry, xi)
    return ris_check(xs, Fraction(1), Fraction(1, 2), list(range(2, count + 2)), profile, oracle,
                     RuleSet.k_xi(xi), registry)


def _las(j: int, profile: ParameterProfile, registry: CodingRegistry) -> Outputs:
    size = profile.n(2 * j - 1)
    x = Vec00.indicator(range(1, size + 1), Fraction(1, size))
    witness = g1_functional(j, range(1, size + 1), profile)
    result = norm_ground(x, profile, registry)
    m_square = profile.m(2 * j - 1) ** 2
    return {
        "witness": _exact(str(witness(x))),
        "target_lower": _exact(str(Fraction(1, m_square))),
        "norm_lower": (_exact if result.exact else _measured)(render(result.lower)),
        "norm_upper": _bound(render(result.upper)),
        "target_upper": (_bound if not profile.unmet else _measured)(str(Fraction(2, m_square))),
    }


def _sup_norm(profile: ParameterProfile, width: int) -> Outputs:
    functionals, truncated = w_enumerate(2, 2, Interval(1, width), profile)
    violations = sup_norm_violations(functionals, profile)
    return {"functionals": _exact(len(functionals)), "truncated": _exact(truncated),
            "violations": _exact(len(violations))}


def basic_inequality_batch(profile: ParameterProfile, registry: CodingRegistry, count: int, seed: int) -> Outputs:
    """Certify `count` random (f, coefficients, interval) instances against the unit RIS of length 6."""
    rng = random.Random(seed)
    ris = unit_ris(6, profile, registry)
    holds = failures = type_one = root_form = avoids_j0 = 0
    for _ in range(count):
        f = random_k_functional(rng, profile, Interval(1, 6), depth=2)
        coefficients = [Fraction(rng.randint(-4, 4), 4) for _ in ris.vectors]
        first = rng.randint(1, 6)
        last = rng.randint(first, 6)
        try:
            certificate = certify_basic_inequality(f, ris, coefficients, (first, last), 2, profile)
        except WorkbenchError:
            failures += 1
            continue
        holds += certificate.holds
        avoids_j0 += certificate.avoids_j0
        if f.analysis is not None and f.analysis.rule == Rule.OP_J:
            type_one += 1
            root_form += certificate.root_form
    return {
        "instances": _exact(count),
        "holds": _exact(holds),
        "preconditions_failed": _exact(failures),
        "type_one": _exact(type_one),
        "root_form": _exact(root_form),
        "avoids_j0": _exact(avoids_j0),
    }


def _attractor(profile: ParameterProfile, registry: CodingRegistry) -> Outputs:
    seq = build_attracting_sequence(1, 1, profile, registry)
    oracle = extension_oracle(RuleSet.k_xi(), 2, profile, registry)
    estimates = attractor_estimates(seq, oracle, profile, registry)
    return {
        "length": _exact(len(seq.xs)),
        "lower": _exact(str(estimates.lower)),
        "lower_member": _exact(estimates.lower_member),
        "sum_member": _exact(estimates.sum_bound_member),
        "upper": _bound(str(estimates.upper)),
        "upper_target": (_measured if estimates.upper_waived else _bound)(str(estimates.upper_target)),
        "psi_lower": _measured(str(estimates.psi_lower)),
    }


def _paper_profile_arithmetic() -> Outputs:
    return {
        "log2_m2": _exact(PaperProfile.log2_m(2)),
        "s1": _exact(PaperProfile.s(1)),
        "log2_n2": _exact(PaperProfile.log2_n(2)),
        "growth_j2": _exact(paper_growth_condition(2)),
        "growth_j3": _exact(paper_growth_condition(3)),
    }


def _l2sum_game(block: int, C: Fraction) -> Outputs:
    space = l2sum_space()
    start = block_range(block)[0]
    transcript = play_game(1, s_strategy_tail(space), v_strategy_unit(space, start), space, C, move_cap=start + 1)
    xs = transcript.vectors
    ratio = l1_ratio(xs, [Fraction(1)] * len(xs), space.oracle)
    return {"k": _exact(len(xs)), "ratio": _exact(render(ratio)), "verdict": _exact(transcript.verdict.value)}


def _special_games(xi: int, profile: ParameterProfile, registry: CodingRegistry, seeds: range) -> Outputs:
    space = ground_space(profile, registry, xi)
    wins, lengths = 0, []
    for seed in seeds:
        transcript = play_game(xi, s_strategy_mask(seed), v_strategy_special(xi, registry, profile), space, 1,
                                move_cap=SPECIAL_MOVE_CAP)
        wins += transcript.verdict == Verdict.V
        lengths.append(len(transcript.vectors))
    return {"games": _exact(len(seeds)), "v_wins": _exact(wins), "lengths": _exact(lengths)}


def _ris_averages(profile: ParameterProfile, registry: CodingRegistry) -> Outputs:
    j = 1
    ris = unit_ris(profile.n(j), profile, registry)
    report = ris_average_bounds(ris, j, [], profile)
    return {"norm_bound": _bound(str(report.norm_bound)), "holds": _measured(report.holds)}


def _l2sum_plays(count: int, seed: int) -> Outputs:
    """Scripted plays over blocks 2..6 with random coefficients; the l2 identity is checked exactly."""
    rng = random.Random(seed)
    space = l2sum_space()
    identities, ratios = 0, set()
    for play in range(count):
        block = 2 + play % 5
        start = block_range(block)[0]
        transcript = play_game(1, s_strategy_tail(space), v_strategy_unit(space, start), space, Fraction(4),
                               move_cap=start + 1)
        xs = transcript.vectors
        a = [Fraction(rng.choice([-1, 1]) * rng.randint(1, 8), rng.randint(1, 4)) for _ in xs]
        total = sum((x.scale(c) for x, c in zip(xs, a)), Vec00())
        expected = sum(((c * x.l1) ** 2 for x, c in zip(xs, a)), Fraction(0))
        identities += l2sum_result(total).lower.square() == expected
        if len(xs) == 16:
            ratios.add(str(render(l1_ratio(xs, [Fraction(1)] * len(xs), space.oracle))["exact"]))
    return {"plays": _exact(count), "identity_holds": _exact(identities), "ratios_k16": _exact(sorted(ratios))}


def _random_small_vector(rng: random.Random) -> Vec00:
    points = rng.sample(range(1, 13), rng.randint(1, MAX_SUPPORT - 1))
    return Vec00.from_mapping({t: Fraction(rng.choice([-1, 1]) * rng.randint(1, 4), 2) for t in points})


def oracle_equivalence(count: int, seed: int, depth: int = 3) -> Outputs:
    """norm_extension against exhaustive evaluation on random micro vectors and one stored chain."""
    rng = random.Random(seed)
    micro = make_profile("micro")
    mismatches = 0
    for _ in range(count):
        x = _random_small_vector(rng)
        rules = parse_rules(rng.choice(EQUIVALENCE_RULES))
        mismatches += norm_extension(x, rules, depth, micro).lower != saturation_by_enumeration(x, rules, depth,
                                                                                             micro)
    registry = CodingRegistry()
    seq = build_attracting_sequence(1, 1, micro, registry)
    x = Vec00.indicator([f.base.minsupp for f in seq.fs])
    chain_value = saturation_by_enumeration(x, RuleSet.k_xi(), depth, micro, registry)
    mismatches += norm_extension(x, RuleSet.k_xi(), depth, micro, registry).lower != chain_value
    return {"vectors": _exact(count + 1), "mismatches": _exact(mismatches), "chain_value": _exact(str(chain_value))}


def dual_grid(sizes: Tuple[int, ...]) -> Outputs:
    """dual_norm of e_1* + e_2*/2 in the l2-sum space against a grid search on [-1, 1]^N."""
    f = Func(Vec00.from_mapping({1: 1, 2: Fraction(1, 2)}), FuncTag(TagKind.TYPE_III))
    gaps = []
    for N in sizes:
        result = dual_norm(f, N, l2sum_result)
        grid, _ = grid_dual_lower(f, N, l2sum_result)
        gaps.append(max(abs(result.lower - grid), grid - result.upper, Fraction(0)))
    return {"sizes": _exact(list(sizes)), "largest_gap": _measured(str(max(gaps))),
            "within_tolerance": _measured(max(gaps) < DUAL_GRID_TOLERANCE)}


def _rerun(experiments: Sequence[Experiment]) -> List[ReportRow]:
    return [_run(row_id, e) for row_id, e in enumerate(experiments, start=1)]


def determinism_check(experiments: Sequence[Experiment]) -> Outputs:
    first, second = value_columns(_rerun(experiments)), value_columns(_rerun(experiments))
    differing = [a["row_id"] for a, b in zip(first, second) if a != b]
    return {"rows": _exact(len(first)), "identical": _exact(not differing), "differing_rows": _exact(differing)}


@dataclass(frozen=True)
class SuiteSizes:
    """Instance counts of the batch suites; `full` reaches the acceptance sizes."""

    schreier_n: int = 12
    maximal_n: int = 12
    basic_inequality: int = 20
    special_games: int = 10
    l2sum_plays: int = 10
    equivalence_vectors: int = 10
    dual_sizes: Tuple[int, ...] = (2, 3)

    @classmethod
    def full(cls) -> "SuiteSizes":
        return cls(schreier_n=20, maximal_n=15, basic_inequality=1000, special_games=50, l2sum_plays=100,
                   equivalence_vectors=200, dual_sizes=(2, 3, 4))


def suite_experiments(suite: str, config: Config, profile: ParameterProfile,
                      registry: CodingRegistry, full: bool = False) -> List[Experiment]:
    """
    The experiments of a suite, in row order; each row works on its own scratch registry.

    `full` runs the acceptance sizes (Schreier checks to N = 20, 10^3 Basic
    Inequality instances, 50 special games, 100 l2-sum plays).
    """
    sizes = SuiteSizes.full() if full else SuiteSizes()
    mini = make_profile("mini", config.mini_m, config.mini_n)
    micro = make_profile("micro")
    seed = config.seed
    scratch = registry.scratch
    if suite == "acceptance":
        experiments = [
            Experiment("schreier", {"xi": str(xi), "N": sizes.schreier_n, "maximal_N": sizes.maximal_n},
                       lambda xi=xi: {name: _exact(count) for name, count in
                                      schreier_mismatches(xi, sizes.schreier_n, sizes.maximal_n).items()})
            for xi in SCHREIER_ORDERS
        ]
        experiments += [
            Experiment("las", {"profile": "micro", "j": 1}, lambda: _las(1, micro, scratch())),
            Experiment("sup_norm", {"profile": "mini", "window": 4}, lambda: _sup_norm(mini, 4)),
            Experiment("basic_inequality", {"profile": "mini", "instances": sizes.basic_inequality, "seed": seed},
                       lambda: basic_inequality_batch(mini, scratch(), sizes.basic_inequality, seed)),
            Experiment("attractor", {"profile": "mini", "j": 1}, lambda: _attractor(mini, scratch())),
            Experiment("l2sum_game", {"block": 6, "C": "4"}, lambda: _l2sum_game(6, Fraction(4))),
            Experiment("l2sum_plays", {"plays": sizes.l2sum_plays, "seed": seed},
                       lambda: _l2sum_plays(sizes.l2sum_plays, seed)),
            Experiment("special_game", {"profile": "mini", "xi": 1, "games": sizes.special_games, "seed": seed},
                       lambda: _special_games(1, mini, scratch(), range(seed, seed + sizes.special_games))),
            Experiment("oracle_equivalence", {"profile": "micro", "vectors": sizes.equivalence_vectors,
                                              "depth": 3, "seed": seed},
                       lambda: oracle_equivalence(sizes.equivalence_vectors, seed)),
            Experiment("dual_grid", {"space": "l2sum", "N": list(sizes.dual_sizes)},
                       lambda: dual_grid(sizes.dual_sizes)),
            Experiment("paper_profile", {}, _paper_profile_arithmetic),
        ]
        others = tuple(experiments)
        experiments.insert(-1, Experiment("determinism", {"rows": len(others), "runs": 2},
                                          lambda: determinism_check(others)))
        return experiments
    if suite == "estimates":
        experiments = [Experiment("las", {"profile": "mini", "j": j}, lambda j=j: _las(j, mini, scratch()))
                       for j in (1, 2)]
        experiments += [
            Experiment("las", {"profile": profile.name, "j": 1}, lambda: _las(1, profile, scratch())),
            Experiment("tail_index", {"profile": "paper", "x": "e_1", "eps": "1"},
                       lambda: {"j0": _exact(tail_index(Vec00.unit(1), Fraction(1), PaperProfile()))}),
            Experiment("ris_averages", {"profile": "mini", "j": 1}, lambda: _ris_averages(mini, scratch())),
            Experiment("attractor", {"profile": "mini", "j": 1}, lambda: _attractor(mini, scratch())),
        ]
        return experiments
    if suite == "games":
        experiments = [Experiment("l2sum_game", {"block": block, "C": "4"},
                                  lambda block=block: _l2sum_game(block, Fraction(4))) for block in range(2, 7)]
        experiments.append(Experiment("l2sum_plays", {"plays": sizes.l2sum_plays, "seed": seed},
                                      lambda: _l2sum_plays(sizes.l2sum_plays, seed)))
        experiments += [
            Experiment("special_game", {"profile": "mini", "xi": xi, "games": sizes.special_games, "seed": seed},
                       lambda xi=xi: _special_games(xi, mini, scratch(), range(seed, seed + sizes.special_games)))
            for xi in (1, 2)
        ]
        return experiments
    raise PreconditionError(f"Unknown suite '{suite}', expected one of {', '.join(SUITES)}")


def _run(row_id: int, experiment: Experiment) -> ReportRow:
    row = ReportRow(row_id, experiment.experiment, experiment.inputs)
    started = time.perf_counter()
    try:
        row.outputs = experiment.run()
    except Exception as e:
        logger.error(f"Experiment {experiment.experiment} (row {row_id}) failed: {e}")
        row.error = f"{type(e).__name__}: {e}"
    row.wall_time = time.perf_counter() - started
    return row


def run_suite(suite: str, config: Config, profile: ParameterProfile, registry: CodingRegistry,
              workers: int = MAX_WORKERS, progress: bool = True, full: bool = False) -> List[ReportRow]:
    experiments = suite_experiments(suite, config, profile, registry, full)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_run, row_id, e) for row_id, e in enumerate(experiments, start=1)]
        rows = [f.result() for f in tqdm(futures, desc=suite, disable=not progress)]
    return rows


def render_table(suite: str, rows: List[ReportRow]) -> Table:
    table = Table(title=f"{suite} suite")
    table.add_column("row", justify="right")
    table.add_column("experiment")
    table.add_column("inputs")
    table.add_column("outputs")
    table.add_column("seconds", justify="right")
    for row in rows:
        if row.ok:
            outputs = ", ".join(f"{name}={_short(o.value)} [{o.provenance.value}]"
                                for name, o in sorted(row.outputs.items()))
        else:
            outputs = f"[red]{row.error}[/red]"
        inputs = ", ".join(f"{k}={v}" for k, v in row.inputs.items())
        table.add_row(str(row.row_id), row.experiment, inputs, outputs, f"{row.wall_time:.2f}")
    return table


def _short(value) -> str:
    if isinstance(value, dict) and "exact" in value:
        return str(value["exact"])
    return str(value)


def export_report(suite: str, config: Config, profile: ParameterProfile, registry: CodingRegistry,
                  output_dir: Optional[Path] = None, console: Optional[Console] = None,
                  progress: bool = True, full: bool = False) -> Tuple[Path, List[ReportRow]]:
    """
    Run a suite, append its rows to <output_dir>/<suite>.jsonl and print the table.

    Returns:
        (report path, rows)
    """
    if suite not in SUITES:
        raise PreconditionError(f"Unknown suite '{suite}', expected one of {', '.join(SUITES)}")
    rows = run_suite(suite, config, profile, registry, progress=progress, full=full)
    path = report_path(Path(output_dir or config.output_dir), suite)
    append_rows(path, rows, suite)
    (console or Console()).print(render_table(suite, rows))
    failed = sum(not row.ok for row in rows)
    if failed:
        logger.warning(f"{suite}: {failed} of {len(rows)} rows failed")
    return path, rows

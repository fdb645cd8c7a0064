"""
Command-line entry point.

    l1workbench [--config FILE] [--json FILE] [--allow-alloc] COMMAND ...

Commands: families, normset, norm, analysis, game, report. Exit codes: 0
success, 2 usage, 3 resource cap, 4 precondition failure.
"""
import argparse
import json
import logging
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

from rich.console import Console

from l1workbench.analysis.exact_pairs import attractor_estimates, build_attracting_sequence, build_exact_pair
from l1workbench.analysis.ris import ris_check
from l1workbench.analysis.spreading import build_l1_tree, spreading_constant
from l1workbench.combinatorics.families import enumerate_restricted, is_maximal, member, parse_family, parse_finset
from l1workbench.combinatorics.ordinal import parse_ordinal
from l1workbench.combinatorics.trees import family_to_tree, tree_order
from l1workbench.games.engine import GameTranscript, play_game, verify_transcript
from l1workbench.games.spaces import SPACE_NAMES, make_space
from l1workbench.games.strategies import S_STRATEGIES, V_STRATEGIES, make_s_strategy, make_v_strategy
from l1workbench.norms.dual import dual_norm, quotient_norm
from l1workbench.norms.extension import norm_extension
from l1workbench.norms.ground_norm import NormResult, norm_ground
from l1workbench.norms.l2sum import l2sum_result
from l1workbench.normsets.ground import build_special_sequence, check_special_sequence, g1_functional
from l1workbench.normsets.rules import parse_rules
from l1workbench.report.generator import SUITES, basic_inequality_batch, export_report
from l1workbench.spaces.coding import CodingRegistry
from l1workbench.spaces.linspace import Func, FuncTag, Interval, TagKind, Vec00, canonical_serialize, parse_func, parse_vector
from l1workbench.spaces.profiles import ParameterProfile, profile_from_config
from l1workbench.utils.config import Config, load_config
from l1workbench.utils.errors import ParseError, PreconditionError, ResourceCapError, WorkbenchError
from l1workbench.utils.logger import setup_logging

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_RESOURCE = 3
EXIT_PRECONDITION = 4

Oracle = Callable[[Vec00], NormResult]


@dataclass
class Context:
    config: Config
    profile: ParameterProfile
    registry: CodingRegistry
    console: Console
    allow_alloc: bool


def _ints(text: str) -> List[int]:
    """`1,2,5` or `1..6`."""
    text = text.strip()
    if ".." in text:
        lo, _, hi = text.partition("..")
        try:
            return list(range(int(lo), int(hi) + 1))
        except ValueError:
            raise ParseError(f"Invalid range '{text}'")
    return list(parse_finset(text))


def _vectors(text: str) -> List[Vec00]:
    return [parse_vector(chunk) for chunk in text.split(";") if chunk.strip()]


def _functional(text: str) -> Func:
    if "|" in text:
        return parse_func(text)
    return Func(parse_vector(text), FuncTag(TagKind.TYPE_III))


def _oracle(ctx: Context, rules: str, depth: int, xi: str) -> Oracle:
    if rules == "l2sum":
        return l2sum_result
    if rules == "G":
        return lambda x: norm_ground(x, ctx.profile, ctx.registry, parse_ordinal(xi))
    rule_set = parse_rules(rules, xi)
    cap = ctx.config.depth_cap
    return lambda x: norm_extension(x, rule_set, depth, ctx.profile, ctx.registry, depth_cap=cap)


def _load_registry(config: Config, allow_alloc: bool) -> CodingRegistry:
    sigma1, sigma = Path(config.registry_sigma1), Path(config.registry_sigma)
    if sigma1.exists() and sigma.exists():
        return CodingRegistry.load(sigma1, sigma, frozen=not allow_alloc)
    logger.info("No registry files found, starting from an empty registry")
    return CodingRegistry(frozen=not allow_alloc)


# families

def cmd_families(ctx: Context, args) -> Tuple[str, Dict[str, Any]]:
    spec = parse_family(args.spec)
    if args.action in ("member", "maximal"):
        if args.set is None:
            raise PreconditionError(f"families {args.action} needs --set")
        F = parse_finset(args.set)
        value = member(spec, F) if args.action == "member" else is_maximal(spec, F)
        return str(value).lower(), {"spec": str(spec), "set": list(F), args.action: value}
    members = enumerate_restricted(spec, args.n, args.cap or ctx.config.enum_cap)
    if args.action == "enumerate":
        text = "\n".join(" ".join(map(str, F)) or "{}" for F in members)
        return text, {"spec": str(spec), "N": args.n, "members": [list(F) for F in members]}
    order = tree_order(family_to_tree(members))
    return str(order), {"spec": str(spec), "N": args.n, "order": order}


# normset

def cmd_normset(ctx: Context, args) -> Tuple[str, Dict[str, Any]]:
    if args.action == "g1":
        f = g1_functional(args.j, _ints(args.support), ctx.profile)
        text = canonical_serialize(f)
        return text, {"functional": text}
    if args.action == "special":
        supports = [_ints(chunk) for chunk in args.supports.split(";") if chunk.strip()]
        seq = build_special_sequence(supports, parse_ordinal(args.xi), ctx.registry, ctx.profile)
        texts = [canonical_serialize(f) for f in seq]
        return "\n".join(texts), {"sequence": texts, "indices": [f.index for f in seq]}
    seq = [parse_func(text) for text in args.funcs]
    check = check_special_sequence(seq, parse_ordinal(args.xi), ctx.registry, ctx.profile)
    return check.describe(), {"accepted": bool(check), "reason": check.describe()}


# norm

def cmd_norm(ctx: Context, args) -> Tuple[str, Dict[str, Any]]:
    oracle = _oracle(ctx, args.rules, args.depth, args.xi)
    if args.action == "eval":
        result = oracle(parse_vector(args.vector))
        return f"[{result.lower}, {result.upper}] ({result.provenance.value})", result.to_json()
    if args.action == "dual":
        result = dual_norm(_functional(args.func), args.n, oracle)
        return f"[{result.lower}, {result.upper}]", result.to_json()
    result = quotient_norm(parse_vector(args.vector), args.n, oracle)
    return f"[{result.lower}, {result.upper}]", result.to_json()


# analysis

def cmd_analysis(ctx: Context, args) -> Tuple[str, Dict[str, Any]]:
    profile, registry = ctx.profile, ctx.registry
    oracle = _oracle(ctx, args.rules, args.depth, args.xi)
    if args.action == "ris":
        witness = ris_check(_vectors(args.vectors), Fraction(args.C), Fraction(args.eps), _ints(args.indices),
                            profile, oracle, parse_rules("K", args.xi), registry)
        verdict = "holds" if witness.holds else f"fails at condition {witness.failed}"
        return verdict, witness.to_json()
    if args.action == "bi":
        outputs = basic_inequality_batch(profile, registry, args.instances, args.seed)
        data = {name: output.to_json() for name, output in outputs.items()}
        return ", ".join(f"{name}={output.value}" for name, output in outputs.items()), data
    if args.action == "pair":
        lo, hi = _ints(args.window)[0], _ints(args.window)[-1]
        pair = build_exact_pair(Interval(lo, hi), args.j, oracle, profile, registry, block=args.block)
        return ("exact pair" if pair.holds else "not an exact pair"), pair.to_json()
    if args.action == "attract":
        seq = build_attracting_sequence(args.j, args.start, profile, registry)
        estimates = attractor_estimates(seq, oracle, profile, registry)
        return f"lower {estimates.lower}, upper {estimates.upper}", {"sequence": seq.to_json(),
                                                                    "estimates": estimates.to_json()}
    if args.action == "spread":
        result = spreading_constant(_vectors(args.vectors), parse_ordinal(args.xi), args.min_start, oracle,
                                    budget=args.budget, seed=ctx.config.seed)
        lower, upper = result.constant_bounds()
        return f"C in [{lower}, {upper}]", result.to_json()
    tree = build_l1_tree(_ints(args.indices), parse_ordinal(args.xi), args.mode, registry, profile, oracle=oracle)
    return f"order {tree.order}", tree.to_json()


# game

def cmd_game(ctx: Context, args) -> Tuple[str, Dict[str, Any]]:
    if args.action == "verify":
        path = Path(args.file)
        if not path.exists():
            raise PreconditionError(f"Transcript not found: {path}")
        try:
            transcript = GameTranscript.from_json(json.loads(path.read_text()))
        except json.JSONDecodeError as e:
            raise ParseError(f"{path}: {e}")
        space = make_space(transcript.space, ctx.profile, ctx.registry, transcript.xi)
        result = verify_transcript(transcript, space)
        verdict = result.verdict.value if result.verdict is not None else None
        text = f"{'valid' if result else 'invalid'}: {result.reason}"
        return text, {"valid": result.ok, "verdict": verdict, "reason": result.reason}
    xi = parse_ordinal(args.xi)
    space = make_space(args.space, ctx.profile, ctx.registry, xi)
    s_strategy = make_s_strategy(args.s, space, args.seed)
    v_strategy = make_v_strategy(args.v, space, xi, ctx.registry, ctx.profile, args.start)
    transcript = play_game(xi, s_strategy, v_strategy, space, Fraction(args.C), args.move_cap)
    if args.out:
        Path(args.out).write_text(transcript.dumps() + "\n")
        logger.info(f"Transcript written to {args.out}")
    return f"verdict {transcript.verdict.value}: {transcript.reason}", transcript.to_json()


# report

def cmd_report(ctx: Context, args) -> Tuple[str, Dict[str, Any]]:
    path, rows = export_report(args.suite, ctx.config, ctx.profile, ctx.registry, args.output_dir,
                               ctx.console, progress=not args.quiet, full=args.full)
    failed = sum(not row.ok for row in rows)
    return f"{len(rows)} rows written to {path} ({failed} failed)", {"path": str(path), "rows": len(rows),
                                                                     "failed": failed}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="l1workbench", description="Exact computations in mixed Tsirelson spaces.")
    parser.add_argument("--config", help="Config file (TOML)")
    parser.add_argument("--json", dest="json_path", help="Write the machine-readable result here")
    parser.add_argument("--allow-alloc", action="store_true", help="Allow coding registry allocations and save them")
    parser.add_argument("-v", "--verbose", action="store_true")
    commands = parser.add_subparsers(dest="command", required=True)

    families = commands.add_parser("families", help="Schreier and regular families")
    families.add_argument("action", choices=("member", "maximal", "enumerate", "order"))
    families.add_argument("--spec", required=True, help='Family text, e.g. "S(1)" or "S(1)[S(2)]|N=10"')
    families.add_argument("--set", help="Finite set, e.g. 3,4,5")
    families.add_argument("--n", type=int, default=10, help="Restrict to subsets of {1..n}")
    families.add_argument("--cap", type=int)
    families.set_defaults(handler=cmd_families)

    normset = commands.add_parser("normset", help="Ground functionals and special sequences")
    normset.add_argument("action", choices=("g1", "special", "check"))
    normset.add_argument("--j", type=int, default=1)
    normset.add_argument("--support", default="1")
    normset.add_argument("--supports", default="1", help="Supports separated by ';'")
    normset.add_argument("--funcs", nargs="*", default=[], help="Canonical functional texts")
    normset.add_argument("--xi", default="1")
    normset.set_defaults(handler=cmd_normset)

    def oracle_options(sub):
        sub.add_argument("--rules", default="K", help="G, K, HI, W:j0, D, WG or l2sum")
        sub.add_argument("--depth", type=int, default=2)
        sub.add_argument("--xi", default="1")

    norm = commands.add_parser("norm", help="Norms, dual norms and quotient norms")
    norm.add_argument("action", choices=("eval", "dual", "quotient"))
    norm.add_argument("--vector", default="1:1")
    norm.add_argument("--func", default="1:1")
    norm.add_argument("--n", type=int, default=4)
    oracle_options(norm)
    norm.set_defaults(handler=cmd_norm)

    analysis = commands.add_parser("analysis", help="RIS, Basic Inequality, exact pairs, spreading, trees")
    analysis.add_argument("action", choices=("ris", "bi", "pair", "attract", "spread", "tree"))
    analysis.add_argument("--vectors", default="1:1", help="Vectors separated by ';'")
    analysis.add_argument("--C", default="1")
    analysis.add_argument("--eps", default="1/2")
    analysis.add_argument("--indices", default="1..6")
    analysis.add_argument("--instances", type=int, default=20)
    analysis.add_argument("--seed", type=int, default=0)
    analysis.add_argument("--j", type=int, default=1)
    analysis.add_argument("--window", default="1..8")
    analysis.add_argument("--block", type=int, default=2)
    analysis.add_argument("--start", type=int, default=1)
    analysis.add_argument("--min-start", type=int, default=1)
    analysis.add_argument("--budget", type=int, default=200)
    analysis.add_argument("--mode", choices=("l1", "c0"), default="l1")
    oracle_options(analysis)
    analysis.set_defaults(handler=cmd_analysis)

    game = commands.add_parser("game", help="Play or replay S_xi-games")
    game.add_argument("action", choices=("play", "verify"))
    game.add_argument("file", nargs="?", help="Transcript to verify")
    game.add_argument("--xi", default="1")
    game.add_argument("--space", choices=SPACE_NAMES, default="l2sum")
    game.add_argument("--s", choices=S_STRATEGIES, default="tail")
    game.add_argument("--v", choices=V_STRATEGIES, default="unit")
    game.add_argument("--C", default="1")
    game.add_argument("--seed", type=int, default=0)
    game.add_argument("--start", type=int, default=1)
    game.add_argument("--move-cap", type=int, default=64)
    game.add_argument("--out", help="Write the transcript here")
    game.set_defaults(handler=cmd_game)

    report = commands.add_parser("report", help="Run a batch suite and append its report")
    report.add_argument("--suite", choices=SUITES, default="acceptance")
    report.add_argument("--output-dir")
    report.add_argument("--quiet", action="store_true", help="No progress bar")
    report.add_argument("--full", action="store_true", help="Run the full acceptance sizes")
    report.set_defaults(handler=cmd_report)
    return parser


def _write_json(path: Optional[str], data: Dict[str, Any]) -> None:
    if path:
        Path(path).write_text(json.dumps(data, indent=2, sort_keys=True, default=str) + "\n")


def run_subcommand(argv: Optional[List[str]] = None, console: Optional[Console] = None) -> int:
    """Parse argv, run the command and map failures to exit codes."""
    console = console or Console()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE
    if args.command == "game" and args.action == "verify" and not args.file:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    setup_logging(logging.DEBUG if args.verbose else logging.WARNING)

    try:
        config = load_config(Path(args.config) if args.config else None)
        profile = profile_from_config(config)
        registry = _load_registry(config, args.allow_alloc)
        ctx = Context(config, profile, registry, console, args.allow_alloc)
        text, data = args.handler(ctx, args)
    except ResourceCapError as e:
        console.print(f"resource cap: {e}", markup=False, highlight=False)
        partial = getattr(e.partial, "to_json", None)
        data = {"error": str(e), "partial": partial() if partial else None}
        if partial:
            console.print(f"partial result: {json.dumps(data['partial'], default=str)}", markup=False, highlight=False)
        _write_json(args.json_path, data)
        return EXIT_RESOURCE
    except PreconditionError as e:
        console.print(f"precondition failed: {e}", markup=False, highlight=False)
        _write_json(args.json_path, {"error": str(e)})
        return EXIT_PRECONDITION
    except WorkbenchError as e:
        console.print(f"error: {e}", markup=False, highlight=False)
        return EXIT_FAILURE

    console.print(text, markup=False, highlight=False)
    _write_json(args.json_path, data)
    if args.allow_alloc and registry.log:
        registry.save(Path(config.registry_sigma1), Path(config.registry_sigma))
        logger.info(f"Saved {len(registry.log)} registry allocations")
    return EXIT_OK


def main() -> None:
    sys.exit(run_subcommand())


if __name__ == "__main__":
    main()

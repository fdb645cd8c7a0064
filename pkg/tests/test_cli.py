"""Tests for the command-line surface and its exit codes."""
import json
from io import StringIO

from rich.console import Console

from l1workbench.cli.main import EXIT_OK, EXIT_PRECONDITION, EXIT_RESOURCE, EXIT_USAGE, run_subcommand


def _run(argv):
    console = Console(file=StringIO(), width=400)
    code = run_subcommand(argv, console)
    return code, console.file.getvalue().strip()


def test_family_membership(clean_env):
    code, output = _run(["families", "member", "--spec", "S(1)", "--set", "3,4,5"])
    assert code == EXIT_OK
    assert output == "true"


def test_family_order(clean_env):
    code, output = _run(["families", "order", "--spec", "S(1)", "--n", "6"])
    assert code == EXIT_OK
    assert output == "3"


def test_unknown_flag_is_a_usage_error(clean_env):
    code, _ = _run(["families", "member", "--spec", "S(1)", "--colour", "red"])
    assert code == EXIT_USAGE


def test_verify_without_file_is_a_usage_error(clean_env):
    code, _ = _run(["game", "verify"])
    assert code == EXIT_USAGE


def test_precondition_failure(clean_env):
    code, output = _run(["families", "maximal", "--spec", "S(1)", "--set", "1,2"])
    assert code == EXIT_PRECONDITION
    assert output.startswith("precondition failed")


def test_depth_cap_exit_code(clean_env):
    config = clean_env / "workbench.toml"
    config.write_text("depth_cap = 1\n")
    out = clean_env / "result.json"
    code, output = _run(["--config", str(config), "--json", str(out), "norm", "eval", "--rules", "K",
                         "--depth", "2", "--vector", "1:1"])
    assert code == EXIT_RESOURCE
    assert "partial result" in output
    data = json.loads(out.read_text())
    assert data["partial"]["depth"] == 1


def test_g1_functional_text(clean_env):
    code, output = _run(["normset", "g1", "--j", "1", "--support", "1,2"])
    assert code == EXIT_OK
    assert output == "[(1,1/4),(2,1/4)]|G1,j=1,w=4,c=1:1.2|-"


def test_allocation_needs_permission(clean_env):
    argv = ["normset", "special", "--supports", "2,3;4,5"]
    code, _ = _run(argv)
    assert code == EXIT_PRECONDITION
    assert not (clean_env / "registry").exists()

    code, _ = _run(["--allow-alloc"] + argv)
    assert code == EXIT_OK
    assert (clean_env / "registry" / "sigma1.tsv").read_text().count("\n") == 1


def test_game_play_and_verify(clean_env):
    transcript = clean_env / "game.json"
    out = clean_env / "result.json"
    code, output = _run(["--json", str(out), "game", "play", "--space", "l2sum", "--start", "16", "--C", "4",
                         "--out", str(transcript)])
    assert code == EXIT_OK
    assert output.startswith("verdict V")
    assert json.loads(out.read_text())["verdict"] == "V"

    code, output = _run(["game", "verify", str(transcript)])
    assert code == EXIT_OK
    assert output.startswith("valid")


def test_norm_eval_in_l2sum(clean_env):
    out = clean_env / "result.json"
    code, _ = _run(["--json", str(out), "norm", "eval", "--rules", "l2sum", "--vector", "2:1,3:1"])
    assert code == EXIT_OK
    assert json.loads(out.read_text())["lower"]["exact"] == "2"

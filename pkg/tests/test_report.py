"""Tests for report storage and suite composition."""
import json
from fractions import Fraction

import pytest
from rich.console import Console

from l1workbench.combinatorics.ordinal import Ordinal
from l1workbench.report.generator import (
    Experiment,
    basic_inequality_batch,
    determinism_check,
    dual_grid,
    oracle_equivalence,
    render_table,
    schreier_mismatches,
    suite_experiments,
)
from l1workbench.report.storage import (
    Output,
    Provenance,
    ReportRow,
    append_rows,
    list_reports,
    read_runs,
    report_path,
    value_columns,
)
from l1workbench.spaces.profiles import make_profile
from l1workbench.utils.config import Config
from l1workbench.utils.errors import ParseError, PreconditionError


def _rows(wall_time):
    return [
        ReportRow(1, "schreier", {"xi": 1}, {"successor": Output(0, Provenance.EXACT)}, wall_time=wall_time),
        ReportRow(2, "attractor", {"j": 1}, error="ResourceCapError: cap", wall_time=wall_time),
    ]


def test_runs_are_appended(tmp_path):
    path = report_path(tmp_path / "reports", "acceptance")
    append_rows(path, _rows(0.5), "acceptance")
    append_rows(path, _rows(2.0), "acceptance")

    first, second = read_runs(path)
    assert [row.experiment for row in first] == ["schreier", "attractor"]
    assert first[0].outputs["successor"].provenance == Provenance.EXACT
    assert not first[1].ok
    assert value_columns(first) == value_columns(second)
    assert first[0].wall_time != second[0].wall_time
    assert list_reports(tmp_path / "reports") == ["acceptance"]


def test_missing_report_reads_as_empty(tmp_path):
    assert read_runs(tmp_path / "none.jsonl") == []


def test_row_before_header_is_rejected(tmp_path):
    path = tmp_path / "broken.jsonl"
    path.write_text(json.dumps(_rows(0.0)[0].to_json()) + "\n")
    with pytest.raises(ParseError):
        read_runs(path)


def test_invalid_row_is_rejected():
    with pytest.raises(ParseError):
        ReportRow.from_json({"row_id": 1, "experiment": "x", "outputs": {"v": {"value": 1, "provenance": "guess"}}})


def test_suite_composition(micro, registry):
    config = Config()
    games = suite_experiments("games", config, micro, registry)
    assert [e.experiment for e in games] == ["l2sum_game"] * 5 + ["l2sum_plays"] + ["special_game"] * 2
    acceptance = suite_experiments("acceptance", config, micro, registry)
    assert [e.experiment for e in acceptance[:4]] == ["schreier"] * 4
    assert acceptance[3].inputs["xi"] == "w*1"
    assert {"oracle_equivalence", "dual_grid", "determinism"} <= {e.experiment for e in acceptance}
    with pytest.raises(PreconditionError):
        suite_experiments("nightly", config, micro, registry)


def test_paper_profile_row(micro, registry):
    experiment = suite_experiments("acceptance", Config(), micro, registry)[-1]
    assert experiment.experiment == "paper_profile"
    outputs = experiment.run()
    assert {name: o.value for name, o in outputs.items()} == {
        "log2_m2": 25, "s1": 75, "log2_n2": 525, "growth_j2": True, "growth_j3": True,
    }
    assert all(o.provenance == Provenance.EXACT for o in outputs.values())


def test_l2sum_game_row(micro, registry):
    """Block 2 starts at coordinate 2, so V needs two vectors from distinct blocks."""
    experiment = suite_experiments("games", Config(), micro, registry)[0]
    outputs = experiment.run()
    assert outputs["verdict"].value == "V"
    assert outputs["k"].value == 2


def test_render_table_lists_every_row():
    table = render_table("acceptance", _rows(0.1))
    assert table.row_count == 2
    console = Console(record=True, width=200)
    console.print(table)
    assert "ResourceCapError" in console.export_text()


def test_full_suites_reach_the_acceptance_sizes(micro, registry):
    acceptance = {e.experiment: e.inputs for e in suite_experiments("acceptance", Config(), micro, registry,
                                                                    full=True)}
    assert acceptance["schreier"]["N"] == 20
    assert acceptance["schreier"]["maximal_N"] == 15
    assert acceptance["basic_inequality"]["instances"] == 1000
    assert acceptance["special_game"]["games"] == 50
    assert acceptance["l2sum_plays"]["plays"] == 100
    games = suite_experiments("games", Config(), micro, registry, full=True)
    assert [e.inputs["games"] for e in games if e.experiment == "special_game"] == [50, 50]


def test_schreier_checks_at_omega():
    assert schreier_mismatches(Ordinal.omega_power(1), 9, maximal_upto=7) == {
        "hereditary": 0, "spreading": 0, "successor": 0, "maximal": 0}


def test_basic_inequality_batch_counts(registry):
    outputs = {name: o.value for name, o in basic_inequality_batch(make_profile("mini"), registry, 12, 7).items()}
    assert set(outputs) == {"instances", "holds", "preconditions_failed", "type_one", "root_form", "avoids_j0"}
    assert outputs["instances"] == 12
    assert outputs["holds"] == outputs["instances"] - outputs["preconditions_failed"]
    assert outputs["avoids_j0"] == outputs["instances"] - outputs["preconditions_failed"]
    assert outputs["root_form"] <= outputs["type_one"] <= outputs["instances"]


def test_oracle_equivalence_row():
    outputs = oracle_equivalence(4, 11)
    assert outputs["mismatches"].value == 0
    assert outputs["vectors"].value == 5
    assert Fraction(outputs["chain_value"].value) >= 1


def test_dual_grid_row():
    outputs = dual_grid((2, 3))
    assert outputs["within_tolerance"].value is True


def test_l2sum_plays_row(micro, registry):
    experiment = next(e for e in suite_experiments("games", Config(), micro, registry)
                      if e.experiment == "l2sum_plays")
    outputs = {name: o.value for name, o in experiment.run().items()}
    assert outputs["identity_holds"] == outputs["plays"] == 10
    assert outputs["ratios_k16"] == ["4"]


def test_determinism_check_compares_value_columns():
    calls = []

    def counting():
        calls.append(1)
        return {"calls": Output(len(calls), Provenance.EXACT)}

    stable = Experiment("paper_profile", {}, lambda: {"value": Output(1, Provenance.EXACT)})
    outputs = determinism_check([stable])
    assert outputs["identical"].value is True
    outputs = determinism_check([stable, Experiment("counting", {}, counting)])
    assert outputs["identical"].value is False
    assert outputs["differing_rows"].value == [2]

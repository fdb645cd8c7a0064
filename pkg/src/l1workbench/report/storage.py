"""
JSON-lines storage for experiment reports.

Reports are append-only: every run adds rows, nothing is rewritten.
"""
import json
import logging
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional

from l1workbench.utils.errors import ParseError

logger = logging.getLogger(__name__)

REPORT_SUFFIX = ".jsonl"


class Provenance(str, Enum):
    EXACT = "exact"
    BOUND = "bound"
    MEASURED = "measured"


@dataclass
class Output:
    value: Any
    provenance: Provenance

    def to_json(self) -> dict:
        return {"value": self.value, "provenance": self.provenance.value}


@dataclass
class ReportRow:
    """
    One experiment of a suite.

    Attributes:
        row_id: Position in the suite; rows are written in this order
        experiment: Experiment id
        inputs: Parameters the experiment ran with
        outputs: Named values, each tagged exact, bound or measured
        error: Failure message when the experiment raised
        wall_time: Seconds spent; the only field allowed to differ between runs
    """

    row_id: int
    experiment: str
    inputs: Dict[str, Any] = field(default_factory=dict)
    outputs: Dict[str, Output] = field(default_factory=dict)
    error: Optional[str] = None
    wall_time: float = 0.0

    @property
    def ok(self) -> bool:
        return self.error is None

    def to_json(self) -> dict:
        return {
            "row_id": self.row_id,
            "experiment": self.experiment,
            "inputs": self.inputs,
            "outputs": {name: output.to_json() for name, output in sorted(self.outputs.items())},
            "error": self.error,
            "wall_time": round(self.wall_time, 3),
        }

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> "ReportRow":
        try:
            outputs = {name: Output(o["value"], Provenance(o["provenance"])) for name, o in data["outputs"].items()}
            return cls(int(data["row_id"]), data["experiment"], data.get("inputs", {}), outputs,
                       data.get("error"), float(data.get("wall_time", 0.0)))
        except (KeyError, ValueError, TypeError) as e:
            raise ParseError(f"Invalid report row: {e}")


def report_path(output_dir: Path, suite: str) -> Path:
    return Path(output_dir) / f"{suite}{REPORT_SUFFIX}"


def append_rows(path: Path, rows: List[ReportRow], suite: str) -> None:
    """
    Append a run header and the rows to a JSON-lines report.

    Args:
        path: Report file, created with its directory if missing
        rows: Rows in row-id order
        suite: Suite name recorded in the header line
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = {"suite": suite, "rows": len(rows), "saved_at": datetime.now(timezone.utc).isoformat()}
    try:
        with open(path, "a") as f:
            f.write(json.dumps(header, sort_keys=True) + "\n")
            for row in rows:
                f.write(json.dumps(row.to_json(), sort_keys=True) + "\n")
        logger.info(f"Report saved: {path} ({len(rows)} rows)")
    except OSError as e:
        logger.error(f"Error saving report {path}: {e}")
        raise


def read_runs(path: Path) -> List[List[ReportRow]]:
    """All runs stored in a report, oldest first."""
    path = Path(path)
    if not path.exists():
        logger.warning(f"Report not found: {path}")
        return []
    runs: List[List[ReportRow]] = []
    with open(path) as f:
        for number, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                data = json.loads(line)
            except json.JSONDecodeError as e:
                raise ParseError(f"{path}:{number}: {e}")
            if "suite" in data:
                runs.append([])
            elif runs:
                runs[-1].append(ReportRow.from_json(data))
            else:
                raise ParseError(f"{path}:{number}: row before any run header")
    return runs


def value_columns(rows: List[ReportRow]) -> List[dict]:
    """Rows without their wall time, for comparing two runs."""
    columns = []
    for row in rows:
        data = row.to_json()
        data.pop("wall_time")
        columns.append(data)
    return columns


def list_reports(output_dir: Path) -> List[str]:
    return sorted(p.stem for p in Path(output_dir).glob(f"*{REPORT_SUFFIX}"))

"""Experiment reports and their CSV / JSON serialization."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

CSV_COLUMNS = ("experiment", "instance_descriptor", "weight", "LHS", "RHS", "ratio", "flags")


def _plain(obj):
    """JSON-normal form: tuples become lists, numpy scalars become Python scalars."""
    return json.loads(json.dumps(obj, default=_default))


def _default(o):
    if hasattr(o, "item"):
        return o.item()
    if hasattr(o, "tolist"):
        return o.tolist()
    raise TypeError(f"cannot serialize {type(o).__name__}")


@dataclass
class InstanceResult:
    descriptor: str
    weight: str
    lhs: Optional[float]
    rhs: Optional[float]
    ratio: Optional[float]
    flags: dict = field(default_factory=dict)

    @property
    def skipped(self) -> bool:
        return self.ratio is None

    def to_dict(self) -> dict:
        return _plain({"descriptor": self.descriptor, "weight": self.weight, "lhs": self.lhs,
                       "rhs": self.rhs, "ratio": self.ratio, "flags": self.flags})


def make_instance(descriptor: str, weight: str, lhs: float, rhs: float, flags=None) -> InstanceResult:
    """Ratio ``lhs / rhs``; instances with ``rhs == 0`` are kept but skipped."""
    lhs, rhs = float(lhs), float(rhs)
    ratio = None if rhs == 0 else lhs / rhs
    return InstanceResult(descriptor, weight, lhs, rhs, ratio, _plain(flags or {}))


@dataclass
class ExperimentReport:
    experiment: str
    instances: list
    provenance: dict
    validity: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)

    @property
    def ratios(self) -> list[float]:
        return [r.ratio for r in self.instances if r.ratio is not None]

    @property
    def max_ratio(self) -> Optional[float]:
        rs = self.ratios
        return max(rs) if rs else None

    @property
    def skipped(self) -> int:
        return sum(r.skipped for r in self.instances)

    def to_dict(self) -> dict:
        return _plain({
            "experiment": self.experiment,
            "max_ratio": self.max_ratio,
            "skipped": self.skipped,
            "validity": self.validity,
            "summary": self.summary,
            "provenance": self.provenance,
            "instances": [r.to_dict() for r in self.instances],
        })

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentReport":
        inst = [InstanceResult(i["descriptor"], i["weight"], i["lhs"], i["rhs"], i["ratio"], i["flags"])
                for i in d["instances"]]
        return cls(d["experiment"], inst, d["provenance"], d.get("validity", {}), d.get("summary", {}))


def _num(v) -> str:
    return "" if v is None else repr(float(v))


def report_csv(report: ExperimentReport) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(CSV_COLUMNS)
    for r in report.instances:
        wr.writerow([report.experiment, r.descriptor, r.weight, _num(r.lhs), _num(r.rhs),
                     _num(r.ratio), json.dumps(r.flags, sort_keys=True)])
    return buf.getvalue()


def report_json(report: ExperimentReport) -> str:
    return json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"


def write_report(report: ExperimentReport, path, fmt: Optional[str] = None) -> Path:
    path = Path(path)
    fmt = (fmt or path.suffix.lstrip(".") or "json").lower()
    if fmt not in ("csv", "json"):
        raise ValueError(f"unknown report format {fmt!r}")
    text = report_csv(report) if fmt == "csv" else report_json(report)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write report to {path}: {exc}") from exc
    return path


def read_report(path) -> ExperimentReport:
    return ExperimentReport.from_dict(json.loads(Path(path).read_text()))


def read_csv_rows(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))

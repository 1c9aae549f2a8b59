"""Result table persistence: cell CSV, per-sample outcome JSON, progress log."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Union

from ..errors import MissingPrerequisiteError
from .matrix import ExperimentCell

CELLS_CSV = "cells.csv"
OUTCOMES_JSON = "outcomes.json"
PROGRESS = "progress.jsonl"

_INT_FIELDS = {"n", "n_success", "n_class0", "success_class0", "n_class1", "success_class1", "seed"}


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return "" if math.isnan(v) else repr(v)
    return str(v)


def _parse_number(s: str):
    if s == "":
        return None
    try:
        return int(s)
    except ValueError:
        return float(s)


def cell_from_row(row: Dict[str, str]) -> ExperimentCell:
    kw = dict(row)
    for k in _INT_FIELDS:
        kw[k] = int(kw[k]) if kw.get(k, "") != "" else 0
    kw["asr"] = float(kw["asr"]) if kw.get("asr", "") != "" else None
    kw["gamma"] = _parse_number(kw.get("gamma", ""))
    kw["param_name"] = kw.get("param_name") or None
    return ExperimentCell(**kw)


def cells_to_csv(cells: Iterable[ExperimentCell]) -> str:
    buf = io.StringIO()
    names = ExperimentCell.field_names()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(names)
    for c in sorted(cells, key=lambda c: c.key):
        d = c.to_dict()
        w.writerow([_fmt(d[k]) for k in names])
    return buf.getvalue()


def write_cells(cells: Iterable[ExperimentCell], path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(cells_to_csv(cells))
    return path


def read_cells(path: Union[str, Path]) -> List[ExperimentCell]:
    path = Path(path)
    if not path.exists():
        raise MissingPrerequisiteError(f"no result table at {path}")
    with path.open(newline="") as fh:
        return [cell_from_row(r) for r in csv.DictReader(fh)]


@dataclass
class UnitResult:
    """All cells sharing one adversarial set: (task, attack, src) against every victim."""

    task: str
    attack: str
    src: str
    cells: List[ExperimentCell]
    outcomes: dict = field(default_factory=dict)

    @property
    def key(self) -> tuple:
        return (self.task, self.attack, self.src)

    def to_json(self) -> str:
        return json.dumps(
            {"task": self.task, "attack": self.attack, "src": self.src, "cells": [c.to_dict() for c in self.cells], "outcomes": self.outcomes},
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, line: str) -> "UnitResult":
        d = json.loads(line)
        return cls(d["task"], d["attack"], d["src"], [ExperimentCell(**c) for c in d["cells"]], d["outcomes"])


class ProgressLog:
    """Append-only log of finished units; a torn last line is ignored on read."""

    def __init__(self, path: Union[str, Path]):
        self.path = Path(path)

    def read(self) -> Dict[tuple, UnitResult]:
        done: Dict[tuple, UnitResult] = {}
        if not self.path.exists():
            return done
        for line in self.path.read_text().splitlines():
            if not line.strip():
                continue
            try:
                unit = UnitResult.from_json(line)
            except (json.JSONDecodeError, KeyError, TypeError):
                continue
            done[unit.key] = unit
        return done

    def append(self, unit: UnitResult) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with self.path.open("a") as fh:
            fh.write(unit.to_json() + "\n")
            fh.flush()

    def reset(self) -> None:
        if self.path.exists():
            self.path.unlink()


def write_outcomes(units: Iterable[UnitResult], path: Union[str, Path], metadata: Optional[dict] = None) -> Path:
    path = Path(path)
    body = {"metadata": metadata or {}, "units": [u.outcomes for u in sorted(units, key=lambda u: u.key)]}
    path.write_text(json.dumps(body, sort_keys=True, indent=1))
    return path

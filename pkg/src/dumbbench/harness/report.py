"""Report bundle: aggregated tables and plot-ready CSVs from a filled result table.

Files written to the report directory:

* ``baseline.csv``: per-model test metrics and parameter counts.
* ``case_asr.csv``: mean ASR per (task, attack, case) with group size.
* ``case_asr_overall.csv``: per (task, family, case) mean over attacks.
* ``family_wins.csv``: model-free beats model-based counts per (task, case).
* ``arch_transfer.csv``: focus attack ASR over surrogate x victim architecture.
* ``class_asr.csv``: minority/majority ASR over surrogate x victim balance.
* ``tuning_traces.csv``: global and per-class (ASR, SSIM) traces per unit.
* ``source_mismatch.csv`` / ``ks.csv``: cross-source ASR densities and KS tests.
* ``summary.json``: headline numbers derived from the above.

Nothing here embeds a timestamp, so two reports on one table are identical.
"""
from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

from ..attacks.registry import MATHEMATICAL, NON_MATHEMATICAL
from .analysis import (
    ARCH_ORDER,
    BALANCE_ORDER,
    aggregate_by_case,
    arch_transfer,
    asr_by_class,
    compare_families,
    family_win_totals,
    mismatch_distributions,
    overall_by_case,
)
from .cases import CASES
from .matrix import ExperimentCell

GRADIENT_ATTACKS = ("FGSM", "BIM", "PGD", "RFGSM", "TIFGSM", "DeepFool")


def _num(v):
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return "" if math.isnan(v) else repr(v)
    if isinstance(v, np.integer):
        return str(int(v))
    return "" if v is None else str(v)


def _write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_num(v) for v in r])
    path.write_text(buf.getvalue())


def white_box_gap(cells: Sequence[ExperimentCell], attacks: Sequence[str] = GRADIENT_ATTACKS) -> dict:
    """Mean case ASR of C1 and C8 over the given attacks and all tasks."""
    rows = [r for r in aggregate_by_case(cells) if r["attack"] in attacks]
    c1 = [r["mean_asr"] for r in rows if r["case"] == "C1"]
    c8 = [r["mean_asr"] for r in rows if r["case"] == "C8"]
    out = {"attacks": sorted({r["attack"] for r in rows}), "n_groups": len(c1)}
    out["mean_c1"] = math.fsum(c1) / len(c1) if c1 else None
    out["mean_c8"] = math.fsum(c8) / len(c8) if c8 else None
    out["c1_ge_c8"] = None if not (c1 and c8) else out["mean_c1"] >= out["mean_c8"]
    return out


def write_report(
    cells: List[ExperimentCell],
    report_dir: Path,
    baselines: Iterable[dict] = (),
    tuning: Iterable[dict] = (),
    config: Optional[dict] = None,
    config_hash: str = "",
) -> Dict[str, Path]:
    report_dir.mkdir(parents=True, exist_ok=True)
    cfg = config or {}
    paths: Dict[str, Path] = {}

    def dest(name: str) -> Path:
        paths[name] = report_dir / name
        return paths[name]

    base = list(baselines)
    cols = ["model", "task", "source", "arch", "balance", "precision", "recall", "f1", "accuracy", "tp", "fp", "tn", "fn", "parameter_count"]
    _write_csv(dest("baseline.csv"), cols, ([b.get(k) for k in cols] for b in base))

    agg = aggregate_by_case(cells)
    _write_csv(dest("case_asr.csv"), ["task", "attack", "family", "case", "mean_asr", "n_cells"], ([r[k] for k in ("task", "attack", "family", "case", "mean_asr", "n_cells")] for r in agg))

    overall = overall_by_case(cells, MATHEMATICAL) + overall_by_case(cells, NON_MATHEMATICAL)
    _write_csv(dest("case_asr_overall.csv"), ["task", "family", "case", "mean_asr", "n_attacks"], ([r["task"], r["family"], r["case"], r["mean_asr"], r["n_attacks"]] for r in overall))

    wins = compare_families(agg)
    _write_csv(dest("family_wins.csv"), ["task", "case", "wins", "comparisons"], ([r["task"], r["case"], r["wins"], r["comparisons"]] for r in wins))

    focus = cfg.get("focus_attack", "TIFGSM")
    archs = [a for a in ARCH_ORDER if a in cfg.get("archs", ARCH_ORDER)]
    grid = arch_transfer(cells, focus, archs)
    _write_csv(dest("arch_transfer.csv"), ["attack", "src_arch", "trg_arch", "mean_asr"], ([focus, a, b, grid[i, j]] for i, a in enumerate(archs) for j, b in enumerate(archs)))

    balances = [b for b in BALANCE_ORDER if b in cfg.get("balances", BALANCE_ORDER)]
    minority = cfg.get("minority_class", 0)
    class_rows = []
    for task in sorted({c.task for c in cells}):
        mats = asr_by_class(cells, task=task, attack=focus, minority_class=minority, balances=balances)
        for role in ("minority", "majority", "combined"):
            for i, sb in enumerate(balances):
                for j, tb in enumerate(balances):
                    class_rows.append([task, focus, role, sb, tb, mats[role][i, j]])
    _write_csv(dest("class_asr.csv"), ["task", "attack", "class_role", "src_balance", "trg_balance", "mean_asr"], class_rows)

    trace_rows = []
    for t in sorted(tuning, key=lambda t: (t["task"], t["attack"], t["src"])):
        parts = [("all", t.get("result"))] + [(f"class{c}", r) for c, r in sorted((t.get("per_class") or {}).items())]
        for scope, res in parts:
            if not res:
                continue
            for k, p in enumerate(res["trace"]):
                trace_rows.append([t["task"], t["attack"], t["src"], scope, k, p["param"], p["asr"], p["mean_ssim"], p["feasible"], res["gamma"], res["status"]])
    _write_csv(
        dest("tuning_traces.csv"),
        ["task", "attack", "src", "scope", "step", "param", "asr", "mean_ssim", "feasible", "gamma", "status"],
        trace_rows,
    )

    mismatch_balance = cfg.get("mismatch_balance", "strong")
    dens_rows, ks_rows, ks_summary = [], [], {}
    for task in sorted({c.task for c in cells}):
        md = mismatch_distributions(cells, balance=mismatch_balance, task=task)
        edges = md["edges"]
        for direction, dens in md["density"].items():
            for k in range(len(edges) - 1):
                dens_rows.append([task, mismatch_balance, direction, edges[k], edges[k + 1], dens[k], len(md["samples"][direction])])
        if md["ks"]:
            ks = md["ks"]
            ks_rows.append([task, mismatch_balance, ks["directions"][0], ks["directions"][1], ks["D"], ks["p"]])
            ks_summary[task] = {"D": ks["D"], "p": ks["p"]}
    _write_csv(dest("source_mismatch.csv"), ["task", "trg_balance", "direction", "bin_lo", "bin_hi", "density", "n"], dens_rows)
    _write_csv(dest("ks.csv"), ["task", "trg_balance", "direction_a", "direction_b", "D", "p"], ks_rows)

    statuses: Dict[str, int] = {}
    for c in cells:
        statuses[c.status] = statuses.get(c.status, 0) + 1
    case_means = {}
    for r in overall:
        case_means.setdefault(r["family"], {}).setdefault(r["task"], {})[r["case"]] = r["mean_asr"]
    summary = {
        "config_hash": config_hash,
        "n_cells": len(cells),
        "cells_by_family": {f: sum(c.family == f for c in cells) for f in (MATHEMATICAL, NON_MATHEMATICAL)},
        "cells_by_status": dict(sorted(statuses.items())),
        "case_means": case_means,
        "white_box_gap": white_box_gap(cells),
        "family_wins": family_win_totals(wins),
        "ks": ks_summary,
        "cases": [c.name for c in CASES],
    }
    dest("summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True, default=_json_default))
    return paths


def _json_default(o):
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    raise TypeError(type(o).__name__)

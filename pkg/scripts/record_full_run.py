"""Summarise a finished run directory into benchmarks/full_run.json.

Usage::

    python3 scripts/record_full_run.py RUN_DIR [--wall-seconds S] [--jobs N] [--cpu-count N]

Counts come from the run's result table and model index. Wall time comes from
``results/timing.json`` (largest recorded invocation) unless ``--wall-seconds``
is given, e.g. from ``time`` around a run that predates the timing file.
"""
import argparse
import json
import os
from collections import Counter
from pathlib import Path

from dumbbench.harness import read_cells


def summarise(run_dir: Path, wall_seconds=None, jobs=None, cpu_count=None) -> dict:
    cells = read_cells(run_dir / "results" / "cells.csv")
    fam = Counter(c.family for c in cells)
    status = Counter(c.status for c in cells)
    models = json.loads((run_dir / "models" / "index.json").read_text())
    config = json.loads((run_dir / "config.json").read_text())
    timing = {}
    path = run_dir / "results" / "timing.json"
    if path.exists():
        timing = max(json.loads(path.read_text()), key=lambda t: t["total_seconds"])
    elif wall_seconds is None:
        raise SystemExit(f"{path} is missing; pass --wall-seconds")
    return {
        "config_hash": config["config_hash"],
        "models": len(models),
        "cells": {"mathematical": fam["mathematical"], "non-mathematical": fam["non-mathematical"], "total": len(cells)},
        "cells_per_attack": dict(sorted(Counter(c.attack for c in cells).items())),
        "status": dict(sorted(status.items())),
        "total_seconds": wall_seconds if wall_seconds is not None else timing["total_seconds"],
        "stage_seconds": timing.get("stage_seconds", {}),
        "jobs": jobs if jobs is not None else timing.get("jobs", 1),
        "cpu_count": cpu_count if cpu_count is not None else timing.get("cpu_count", os.cpu_count()),
    }


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("run_dir", type=Path)
    p.add_argument("--wall-seconds", type=float)
    p.add_argument("--jobs", type=int)
    p.add_argument("--cpu-count", type=int)
    p.add_argument("-o", "--output", type=Path, default=Path(__file__).resolve().parents[1] / "benchmarks" / "full_run.json")
    args = p.parse_args(argv)
    record = summarise(args.run_dir, args.wall_seconds, args.jobs, args.cpu_count)
    args.output.parent.mkdir(parents=True, exist_ok=True)
    args.output.write_text(json.dumps(record, indent=2, sort_keys=True) + "\n")
    print(args.output)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

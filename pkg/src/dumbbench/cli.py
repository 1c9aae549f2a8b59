"""Command-line front end.

Subcommands follow the pipeline order::

    dumbbench gen-data     [--task T] [--source S] [--per-class N]
    dumbbench ingest       --path DIR --task T --source S
    dumbbench train-all    [--task T]
    dumbbench tune-attacks [--task T]
    dumbbench run-matrix   [--resume]
    dumbbench report
    dumbbench run-all

Shared flags: ``--config`` (JSON), ``--seed``, ``--jobs``, ``--out``. Exit
codes: 0 success, 1 configuration error, 2 missing prerequisite, 3 runtime
failure. Progress goes to stderr; the path of the produced artifact goes to
stdout.
"""
from __future__ import annotations

import argparse
import logging
import sys
from typing import List, Optional

from . import pipeline
from .config import RunConfig
from .errors import ConfigError, DumbError, MissingPrerequisiteError

EXIT_OK, EXIT_CONFIG, EXIT_MISSING, EXIT_RUNTIME = 0, 1, 2, 3


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON run configuration (defaults apply to absent keys)")
    p.add_argument("--seed", type=int, help="base seed, overrides the config")
    p.add_argument("--jobs", type=int, help="worker processes")
    p.add_argument("--out", help="output root; runs live in <out>/<config-hash>/")
    p.add_argument("-q", "--quiet", action="store_true", help="only warnings on stderr")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dumbbench", description="Transferability benchmark over source, architecture and balance mismatch.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="render the procedural datasets and split them")
    _common(p)
    p.add_argument("--task", action="append", help="restrict to a task (repeatable)")
    p.add_argument("--source", action="append", choices=["A", "B"], help="restrict to a source (repeatable)")
    p.add_argument("--per-class", type=int, dest="per_class", help="images per class, overrides the config")

    p = sub.add_parser("ingest", help="import a folder of class subdirectories as one dataset")
    _common(p)
    p.add_argument("--path", required=True)
    p.add_argument("--task", required=True)
    p.add_argument("--source", required=True, choices=["A", "B"])
    p.add_argument("--per-class", type=int, dest="per_class", help=argparse.SUPPRESS)

    for name, text in (("train-all", "train every model of the matrix"), ("tune-attacks", "pick each attack's strength per surrogate")):
        p = sub.add_parser(name, help=text)
        _common(p)
        p.add_argument("--task", action="append", help="restrict to a task (repeatable)")
        p.add_argument("--per-class", type=int, dest="per_class", help=argparse.SUPPRESS)

    p = sub.add_parser("run-matrix", help="evaluate every (attack, surrogate, victim) cell")
    _common(p)
    p.add_argument("--resume", action="store_true", help="keep finished units from an interrupted run")
    p.add_argument("--per-class", type=int, dest="per_class", help=argparse.SUPPRESS)

    p = sub.add_parser("report", help="aggregate the result table into report files")
    _common(p)
    p.add_argument("--per-class", type=int, dest="per_class", help=argparse.SUPPRESS)

    p = sub.add_parser("run-all", help="all stages in order, resuming where possible")
    _common(p)
    p.add_argument("--per-class", type=int, dest="per_class", help=argparse.SUPPRESS)
    return parser


def effective_config(args) -> RunConfig:
    cfg = RunConfig.load(args.config)
    d = cfg.to_dict()
    if args.seed is not None:
        d["seed"] = args.seed
    if args.jobs is not None:
        d["jobs"] = args.jobs
    if args.out is not None:
        d["out"] = args.out
    if getattr(args, "per_class", None) is not None:
        d["per_class_count"] = args.per_class
    return RunConfig.from_dict(d)


def _check_tasks(cfg: RunConfig, tasks) -> Optional[List[str]]:
    if not tasks:
        return None
    bad = [t for t in tasks if t not in cfg.tasks]
    if bad:
        raise ConfigError(f"tasks {bad} are not part of the configuration {cfg.tasks}")
    return tasks


def dispatch(args) -> str:
    cfg = effective_config(args)
    ws = pipeline.Workspace(cfg)
    cmd = args.command
    if cmd == "gen-data":
        pipeline.gen_data(ws, _check_tasks(cfg, args.task), args.source)
        return str(ws.data_dir)
    if cmd == "ingest":
        _check_tasks(cfg, [args.task])
        return str(pipeline.ingest(ws, args.path, args.task, args.source))
    if cmd == "train-all":
        pipeline.train_all(ws, _check_tasks(cfg, args.task), jobs=cfg.jobs)
        return str(ws.models_dir)
    if cmd == "tune-attacks":
        pipeline.tune_attacks(ws, _check_tasks(cfg, args.task), jobs=cfg.jobs)
        return str(ws.tuning_dir)
    if cmd == "run-matrix":
        return str(pipeline.run_matrix(ws, jobs=cfg.jobs, resume=args.resume))
    if cmd == "report":
        pipeline.report(ws)
        return str(ws.report_dir)
    if cmd == "run-all":
        pipeline.run_all(ws, jobs=cfg.jobs)
        pipeline.report(ws)
        return str(ws.report_dir)
    raise ConfigError(f"unknown command {cmd}")


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(asctime)s %(levelname)s %(message)s",
        stream=sys.stderr,
    )
    log = logging.getLogger("dumbbench")
    try:
        print(dispatch(args))
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    except MissingPrerequisiteError as exc:
        log.error("missing prerequisite (%s)", exc.detail)
        return EXIT_MISSING
    except DumbError as exc:
        log.error("%s", exc)
        return EXIT_RUNTIME
    except Exception as exc:  # noqa: BLE001 - reported as a runtime failure
        log.exception("runtime failure: %s", exc)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

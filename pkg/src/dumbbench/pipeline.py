"""Stage orchestration over a run directory.

Layout under ``<out>/<config-hash>/``::

    config.json   effective configuration (all defaults written out)
    data/         one split per (task, source) plus content-addressed PNGs
    models/       checkpoints and registry index
    tuning/       one JSON per (task, attack, surrogate or source dataset)
    results/      cells.csv, outcomes.json, run.json, timing.json, progress.jsonl
    report/       aggregated tables and plot data

Every stage skips work whose output already exists, so re-running a stage
with an unchanged configuration is a no-op.
"""
from __future__ import annotations

import json
import logging
import multiprocessing as mp
import os
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, Iterable, Iterator, List, Optional, Sequence

import numpy as np

from .attacks.registry import AttackSpec
from .config import RunConfig
from .errors import DumbError, MatrixError, MissingPrerequisiteError, RegistryError
from .harness.evalset import select_eval_set
from .harness.matrix import REFERENCE_BALANCE, ExperimentCell, build_matrix, dataset_id
from .harness.report import write_report
from .harness.results import CELLS_CSV, OUTCOMES_JSON, PROGRESS, ProgressLog, UnitResult, read_cells, write_cells, write_outcomes
from .models.registry import load_registry, save_records
from .models.training import ModelRecord, derive_seed, train
from .synthdata.generate import SOURCES, ImageSet, generate_dataset, get_task
from .synthdata.ingest import ingest_folder
from .synthdata.splits import BALANCE_LEVELS, DatasetSplit, deduplicate, split
from .synthdata.store import load_split, save_split
from .tuning import STATUS_FIXED, STATUS_OK, TuningResult, evaluate_grid, select

log = logging.getLogger("dumbbench")

MANIFEST = "manifest.json"


def model_id(task: str, source: str, arch: str, balance: str) -> str:
    return f"{task}-{source}-{arch}-{balance}"


@dataclass(frozen=True)
class Unit:
    """Work item sharing one adversarial set: ``src`` is a model id or a dataset id."""

    task: str
    attack: str
    src: str

    @property
    def key(self) -> tuple:
        return (self.task, self.attack, self.src)


class Workspace:
    def __init__(self, cfg: RunConfig, out: Optional[str] = None):
        self.cfg = cfg
        self.root = cfg.run_dir(out)
        self.data_dir = self.root / "data"
        self.models_dir = self.root / "models"
        self.tuning_dir = self.root / "tuning"
        self.results_dir = self.root / "results"
        self.report_dir = self.root / "report"
        self._splits: Dict[tuple, DatasetSplit] = {}
        self._registry: Optional[Dict[str, ModelRecord]] = None
        self._specs = {s.name: s for s in cfg.attack_specs()}

    # ---- configuration
    def write_config(self) -> Path:
        self.root.mkdir(parents=True, exist_ok=True)
        path = self.root / "config.json"
        body = {"config_hash": self.cfg.config_hash(), "config": self.cfg.content()}
        path.write_text(json.dumps(body, indent=2, sort_keys=True))
        return path

    def spec(self, name: str) -> AttackSpec:
        return self._specs[name]

    @property
    def specs(self) -> List[AttackSpec]:
        return [self._specs[a] for a in self.cfg.attacks]

    # ---- data
    def dataset_dir(self, task: str, source: str) -> Path:
        return self.data_dir / dataset_id(task, source)

    def has_split(self, task: str, source: str) -> bool:
        return (self.dataset_dir(task, source) / MANIFEST).exists()

    def split(self, task: str, source: str) -> DatasetSplit:
        key = (task, source)
        if key not in self._splits:
            if not self.has_split(task, source):
                raise MissingPrerequisiteError(f"gen-data: no dataset for {dataset_id(task, source)}")
            self._splits[key] = load_split(self.dataset_dir(task, source))
        return self._splits[key]

    # ---- models
    def expected_model_ids(self, task: str) -> List[str]:
        c = self.cfg
        return sorted(model_id(task, s, a, b) for s in c.sources for a in c.archs for b in c.balances)

    def registry(self) -> Dict[str, ModelRecord]:
        if self._registry is None:
            try:
                self._registry = load_registry(self.models_dir)
            except MissingPrerequisiteError:
                raise MissingPrerequisiteError("train-all: no trained models") from None
        return self._registry

    def models_for(self, task: str) -> List[ModelRecord]:
        reg = self.registry()
        missing = [m for m in self.expected_model_ids(task) if m not in reg]
        if missing:
            raise MissingPrerequisiteError(f"train-all: {len(missing)} models missing for task {task}, e.g. {missing[0]}")
        return [reg[m] for m in self.expected_model_ids(task)]

    def reference_models(self, task: str, source: str) -> List[ModelRecord]:
        reg = self.registry()
        return [reg[model_id(task, source, a, REFERENCE_BALANCE)] for a in self.cfg.archs]

    # ---- units
    def units(self, tasks: Optional[Sequence[str]] = None) -> List[Unit]:
        out = []
        for task in tasks or self.cfg.tasks:
            for spec in self.specs:
                if spec.is_mathematical:
                    out.extend(Unit(task, spec.name, m) for m in self.expected_model_ids(task))
                else:
                    out.extend(Unit(task, spec.name, dataset_id(task, s)) for s in sorted(self.cfg.sources))
        return out

    def tuning_path(self, unit: Unit) -> Path:
        return self.tuning_dir / unit.task / unit.attack / f"{unit.src}.json"

    def read_tuning(self, unit: Unit) -> dict:
        path = self.tuning_path(unit)
        if not path.exists():
            raise MissingPrerequisiteError(f"tune-attacks: no tuning result for {unit.attack} on {unit.src}")
        return json.loads(path.read_text())

    def eval_seed(self, unit: Unit) -> int:
        return derive_seed(self.cfg.seed, "eval", unit.src)

    def attack_seed(self, unit: Unit) -> int:
        return derive_seed(self.cfg.seed, "attack", unit.attack, unit.src)

    def unit_models(self, unit: Unit):
        """(generating model or None, scoring models, source id) for a unit."""
        if self.spec(unit.attack).is_mathematical:
            rec = self.registry()[unit.src]
            return rec.model, [rec.model], rec.provenance.source
        source = unit.src.rsplit("-", 1)[1]
        return None, [r.model for r in self.reference_models(unit.task, source)], source


# Workers reach the workspace through this global; with the fork start method
# it is inherited from the parent, so nothing large is pickled per task.
_WS: Optional[Workspace] = None


def _pmap(fn: Callable, items: Sequence, jobs: int) -> Iterator:
    """Yield ``fn(item)`` results; order follows completion when ``jobs > 1``."""
    if jobs <= 1 or len(items) <= 1:
        for it in items:
            yield fn(it)
        return
    ctx = mp.get_context("fork")
    with ProcessPoolExecutor(max_workers=jobs, mp_context=ctx) as ex:
        futures = [ex.submit(fn, it) for it in items]
        for f in as_completed(futures):
            yield f.result()


# ---------------------------------------------------------------- data stage


def _store(ws: Workspace, images: ImageSet, task: str, source: str) -> Path:
    images = deduplicate(images)
    sp = split(images, ws.cfg.split_ratios_tuple(), seed=derive_seed(ws.cfg.seed, "split", task, source))
    return save_split(sp, ws.dataset_dir(task, source), images_dir=ws.data_dir / "images")


def gen_data(ws: Workspace, tasks: Optional[Sequence[str]] = None, sources: Optional[Sequence[str]] = None) -> List[Path]:
    ws.write_config()
    out = []
    for task in tasks or ws.cfg.tasks:
        for source in sources or ws.cfg.sources:
            if ws.has_split(task, source):
                log.info("data %s exists, skipping", dataset_id(task, source))
                continue
            t0 = time.time()
            images = generate_dataset(get_task(task, ws.cfg.image_size), SOURCES[source], ws.cfg.seed, ws.cfg.per_class_count)
            out.append(_store(ws, images, task, source))
            log.info("data %s: %d images in %.1fs", dataset_id(task, source), len(images), time.time() - t0)
    return out


def ingest(ws: Workspace, path: str, task: str, source: str) -> Path:
    """Replace the (task, source) dataset by images from ``path/<class>/*.png``."""
    ws.write_config()
    images = ingest_folder(path, image_size=ws.cfg.image_size)
    images.provenance.update({"task": task, "source": source, "seed": ws.cfg.seed, "ingested_from": str(path)})
    return _store(ws, images, task, source)


# ------------------------------------------------------------- training stage


def _train_job(key: tuple) -> ModelRecord:
    task, source, arch, balance = key
    ws = _WS
    return train(arch, ws.split(task, source), BALANCE_LEVELS[balance], ws.cfg.training_config(), ws.cfg.minority_class)


def train_all(ws: Workspace, tasks: Optional[Sequence[str]] = None, jobs: int = 1) -> int:
    global _WS
    ws.write_config()
    tasks = list(tasks or ws.cfg.tasks)
    for task in tasks:
        for source in ws.cfg.sources:
            ws.split(task, source)  # fail early when data is missing
    done = set()
    if (ws.models_dir / "index.json").exists():
        done = set(json.loads((ws.models_dir / "index.json").read_text()))
    jobs_list = [
        (t, s, a, b)
        for t in tasks for s in ws.cfg.sources for b in ws.cfg.balances for a in ws.cfg.archs
        if model_id(t, s, a, b) not in done
    ]
    log.info("training %d models (%d already present)", len(jobs_list), len(done))
    _WS = ws
    n = 0
    for rec in _pmap(_train_job, jobs_list, jobs):
        save_records([rec], ws.models_dir)
        n += 1
        log.info("[%d/%d] %s f1=%.3f", n, len(jobs_list), rec.model_id, rec.baseline.f1)
    ws._registry = None
    return n


# --------------------------------------------------------------- tuning stage


def _eval_set(ws: Workspace, unit: Unit, scoring, source: str):
    test = ws.split(unit.task, source).test
    return select_eval_set(scoring, test, ws.cfg.n_samples, ws.eval_seed(unit))


def _tune_job(unit: Unit) -> dict:
    ws = _WS
    spec = ws.spec(unit.attack)
    _, scoring, source = ws.unit_models(unit)
    body = {
        "task": unit.task,
        "attack": unit.attack,
        "src": unit.src,
        "eval_seed": ws.eval_seed(unit),
        "attack_seed": ws.attack_seed(unit),
        "hyperparams": spec.fixed_params,
    }
    try:
        X, y, idx = _eval_set(ws, unit, scoring, source)
        evaluation = evaluate_grid(spec, scoring, X, y, ws.cfg.tuning_config(), seed=ws.attack_seed(unit))
    except RegistryError:
        raise
    except DumbError as exc:
        body.update(status=exc.code, error=exc.detail, indices=[], result=None, per_class={})
        return body
    result = select(spec, evaluation, ws.cfg.alpha)
    per_class = {str(c): select(spec, evaluation, ws.cfg.alpha, evaluation.labels == c).to_dict() for c in (0, 1)}
    body.update(status=result.status, error=None, indices=idx.tolist(), result=result.to_dict(), per_class=per_class)
    return body


def tune_attacks(ws: Workspace, tasks: Optional[Sequence[str]] = None, jobs: int = 1) -> int:
    global _WS
    ws.write_config()
    tasks = list(tasks or ws.cfg.tasks)
    for task in tasks:
        ws.models_for(task)
    todo = [u for u in ws.units(tasks) if not ws.tuning_path(u).exists()]
    log.info("tuning %d (attack, surrogate) units", len(todo))
    _WS = ws
    n = 0
    for body in _pmap(_tune_job, todo, jobs):
        unit = Unit(body["task"], body["attack"], body["src"])
        path = ws.tuning_path(unit)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(body, indent=1, sort_keys=True))
        n += 1
        label = (body.get("result") or {}).get("label", "")
        log.info("[%d/%d] %s %s: %s %s", n, len(todo), unit.attack, unit.src, body["status"], label)
    return n


# --------------------------------------------------------------- matrix stage


def _run_job(args) -> UnitResult:
    unit, cells = args
    ws = _WS
    tuning = ws.read_tuning(unit)
    status = tuning["status"]
    gamma = (tuning.get("result") or {}).get("gamma")
    seed = tuning["attack_seed"]
    outcomes = {"task": unit.task, "attack": unit.attack, "src": unit.src, "status": status, "gamma": gamma, "targets": {}}
    for c in cells:
        c.gamma, c.seed = gamma, seed
    if status not in (STATUS_OK, STATUS_FIXED):
        for c in cells:
            c.status = status
        return UnitResult(unit.task, unit.attack, unit.src, cells, outcomes)
    spec = ws.spec(unit.attack)
    generator, _, source = ws.unit_models(unit)
    test = ws.split(unit.task, source).test
    idx = np.asarray(tuning["indices"], dtype=np.int64)
    X, y = test.X[idx], test.y[idx]
    try:
        x_adv = spec.apply(generator, X, y, gamma, seed)
    except DumbError as exc:
        for c in cells:
            c.status = exc.code
        return UnitResult(unit.task, unit.attack, unit.src, cells, outcomes)
    reg = ws.registry()
    outcomes.update(indices=idx.tolist(), labels="".join(map(str, y.tolist())))
    for c in cells:
        success = np.asarray(reg[c.trg].model.predict(x_adv)) != y
        c.n = int(len(y))
        c.n_success = int(success.sum())
        c.asr = c.n_success / c.n
        c.n_class0 = int(np.sum(y == 0))
        c.n_class1 = int(np.sum(y == 1))
        c.success_class0 = int(success[y == 0].sum())
        c.success_class1 = int(success[y == 1].sum())
        c.status = STATUS_OK
        outcomes["targets"][c.trg] = "".join("1" if s else "0" for s in success)
    return UnitResult(unit.task, unit.attack, unit.src, cells, outcomes)


def expected_cells(ws: Workspace, tasks: Optional[Sequence[str]] = None) -> List[ExperimentCell]:
    cells = []
    for task in tasks or ws.cfg.tasks:
        cells.extend(build_matrix(task, ws.models_for(task), ws.specs, expected=ws.cfg.models_per_task))
    return cells


def run_matrix(ws: Workspace, jobs: int = 1, resume: bool = False) -> Path:
    global _WS
    ws.write_config()
    cells = expected_cells(ws)
    units = ws.units()
    for u in units:
        ws.read_tuning(u)  # every unit must be tuned before any cell runs
    by_unit: Dict[tuple, List[ExperimentCell]] = {}
    for c in cells:
        by_unit.setdefault((c.task, c.attack, c.src), []).append(c)
    progress = ProgressLog(ws.results_dir / PROGRESS)
    if not resume:
        progress.reset()
    done = progress.read()
    todo = [(u, by_unit[u.key]) for u in units if u.key not in done]
    log.info("matrix: %d cells in %d units, %d units already done", len(cells), len(units), len(done))
    started = time.time()
    _WS = ws
    n = 0
    for res in _pmap(_run_job, todo, jobs):
        progress.append(res)
        done[res.key] = res
        n += 1
        if n % 20 == 0 or n == len(todo):
            log.info("[%d/%d] units", n, len(todo))
    finished = [c for u in units for c in done[u.key].cells]
    if len(finished) != len(cells):
        raise MatrixError(f"result table has {len(finished)} cells, expected {len(cells)}")
    path = write_cells(finished, ws.results_dir / CELLS_CSV)
    meta = {"config_hash": ws.cfg.config_hash(), "seed": ws.cfg.seed, "n_cells": len(finished)}
    write_outcomes([done[u.key] for u in units], ws.results_dir / OUTCOMES_JSON, meta)
    run_meta = dict(meta, elapsed_seconds=round(time.time() - started, 3), finished_at=time.strftime("%Y-%m-%dT%H:%M:%S"), jobs=jobs)
    (ws.results_dir / "run.json").write_text(json.dumps(run_meta, indent=2, sort_keys=True))
    return path


def run_all(ws: Workspace, jobs: int = 1) -> Path:
    """Every stage in order.

    Each invocation appends its stage wall times to ``results/timing.json``,
    so a later no-op rerun does not hide the cost of the run that did the work.
    """
    stages = (
        ("gen-data", lambda: gen_data(ws)),
        ("train-all", lambda: train_all(ws, jobs=jobs)),
        ("tune-attacks", lambda: tune_attacks(ws, jobs=jobs)),
        ("run-matrix", lambda: run_matrix(ws, jobs=jobs, resume=True)),
    )
    seconds = {}
    path = None
    for name, fn in stages:
        t0 = time.time()
        path = fn()
        seconds[name] = round(time.time() - t0, 3)
    timing_path = ws.results_dir / "timing.json"
    history = json.loads(timing_path.read_text()) if timing_path.exists() else []
    history.append(
        {
            "stage_seconds": seconds,
            "total_seconds": round(sum(seconds.values()), 3),
            "jobs": jobs,
            "cpu_count": os.cpu_count(),
            "finished_at": time.strftime("%Y-%m-%dT%H:%M:%S"),
        }
    )
    timing_path.write_text(json.dumps(history, indent=2, sort_keys=True))
    return path


def iter_baselines(ws: Workspace) -> Iterable[dict]:
    for mid, rec in sorted(ws.registry().items()):
        p = rec.provenance
        row = {"model": mid, "task": p.task, "source": p.source, "arch": p.arch, "balance": p.balance}
        row.update(rec.baseline.to_dict() if rec.baseline else {})
        row["parameter_count"] = rec.model.parameter_count
        yield row


# --------------------------------------------------------------- report stage


def report(ws: Workspace) -> Dict[str, Path]:
    path = ws.results_dir / CELLS_CSV
    if not path.exists():
        raise MissingPrerequisiteError("run-matrix: no result table")
    cells = read_cells(path)
    if not cells:
        raise MissingPrerequisiteError("run-matrix: result table is empty")
    tuning = []
    if ws.tuning_dir.exists():
        for p in sorted(ws.tuning_dir.rglob("*.json")):
            tuning.append(json.loads(p.read_text()))
    baselines = list(iter_baselines(ws)) if (ws.models_dir / "index.json").exists() else []
    return write_report(cells, ws.report_dir, baselines, tuning, ws.cfg.content(), ws.cfg.config_hash())

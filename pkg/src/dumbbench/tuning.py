"""Attack-strength selection under a perceptual-similarity floor.

For an attack with tunable parameter ``s`` the tuner scans the whole grid and
keeps the value with the highest attack success rate among points whose mean
SSIM against the clean images is at least ``alpha``. Equal ASR is resolved
toward the smaller parameter (less perturbation). If no grid point meets the
floor the result is marked ``constraint-infeasible``; alpha is never relaxed.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from .attacks.gradient import fgsm_sweep
from .attacks.registry import AttackSpec, ParamGrid
from .errors import EmptyEvalError, EvalError
from .perceptual import ssim_batch
from .validation import check_images, check_labels

STATUS_OK = "ok"
STATUS_FIXED = "fixed"  # parameter-free transform: nothing to choose
STATUS_INFEASIBLE = "constraint-infeasible"


def asr(model, originals, adversarials, labels) -> float:
    """Fraction of adversarial images the model does not assign to their true label."""
    labels = np.asarray(labels)
    if not (len(originals) == len(adversarials) == len(labels)):
        raise EvalError(f"length mismatch: {len(originals)} originals, {len(adversarials)} adversarials, {len(labels)} labels")
    if len(labels) == 0:
        raise EmptyEvalError("ASR over no samples")
    return float(np.mean(np.asarray(model.predict(adversarials)) != labels))


@dataclass(frozen=True)
class TuningConfig:
    """alpha: SSIM floor; n_samples: tuning-set size; grids: per-attack overrides."""

    alpha: float = 0.4
    n_samples: int = 100
    grids: Dict[str, ParamGrid] = field(default_factory=dict)

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")
        if self.n_samples < 2:
            raise ValueError("n_samples must be >= 2")

    def grid_values(self, spec: AttackSpec) -> list:
        if spec.param_name is None:
            return [None]
        grid = self.grids.get(spec.name, spec.grid)
        values = grid.values()
        if not values:
            raise ValueError(f"empty grid for {spec.name}")
        return values


@dataclass
class TracePoint:
    param: object
    asr: float
    mean_ssim: float
    feasible: bool

    def to_dict(self) -> dict:
        return {"param": self.param, "asr": self.asr, "mean_ssim": self.mean_ssim, "feasible": self.feasible}


@dataclass
class TuningResult:
    """Outcome of one grid scan; ``gamma`` is None when infeasible or parameter-free."""

    attack: str
    param_name: Optional[str]
    gamma: object
    status: str
    alpha: float
    n_samples: int
    trace: List[TracePoint]
    label: str = ""
    positive_class: Optional[int] = None

    @property
    def feasible(self) -> bool:
        if self.status == STATUS_FIXED:
            return self.trace[0].feasible
        return self.status == STATUS_OK

    @property
    def runnable(self) -> bool:
        return self.status in (STATUS_OK, STATUS_FIXED)

    @property
    def best(self) -> Optional[TracePoint]:
        if self.status == STATUS_FIXED:
            return self.trace[0]
        for p in self.trace:
            if p.param == self.gamma and self.status == STATUS_OK:
                return p
        return None

    def to_dict(self) -> dict:
        return {
            "attack": self.attack,
            "param_name": self.param_name,
            "gamma": self.gamma,
            "status": self.status,
            "feasible": self.feasible,
            "alpha": self.alpha,
            "n_samples": self.n_samples,
            "label": self.label,
            "trace": [p.to_dict() for p in self.trace],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TuningResult":
        trace = [TracePoint(**p) for p in d["trace"]]
        return cls(d["attack"], d["param_name"], d["gamma"], d["status"], d["alpha"], d["n_samples"], trace, d.get("label", ""))


@dataclass
class GridEvaluation:
    """Per-sample outcomes for every grid point.

    ``success[k]`` has shape (n_models, n_samples): True where that model
    misclassifies the perturbed sample. ``ssim[k]`` has shape (n_samples,).
    """

    params: list
    success: List[np.ndarray]
    ssim: List[np.ndarray]
    labels: np.ndarray


def _as_models(surrogate) -> list:
    if isinstance(surrogate, (list, tuple)):
        if not surrogate:
            raise ValueError("at least one model is required")
        return list(surrogate)
    return [surrogate]


def _perturb_all(spec: AttackSpec, model, X, y, params, seed):
    if spec.name == "FGSM" and not spec.fixed:
        yield from fgsm_sweep(model, X, y, params)
        return
    for p in params:
        yield p, spec.apply(model, X, y, p, seed)


def evaluate_grid(spec: AttackSpec, surrogate, X, y, config: TuningConfig, seed: int = 0) -> GridEvaluation:
    """Run the attack at every grid value and score it against each model.

    Mathematical attacks are generated on the first model; every model in
    ``surrogate`` scores every perturbed set. All grid points share ``seed``.
    """
    models = _as_models(surrogate)
    X = check_images(X)
    y = check_labels(y, len(X))
    if len(y) == 0:
        raise EmptyEvalError(f"no tuning samples for {spec.name}")
    params = config.grid_values(spec)
    success, ssims = [], []
    for _, x_adv in _perturb_all(spec, models[0], X, y, params, seed):
        success.append(np.stack([np.asarray(m.predict(x_adv)) != y for m in models]))
        ssims.append(ssim_batch(X, x_adv))
    return GridEvaluation(params, success, ssims, y)


def select(spec: AttackSpec, evaluation: GridEvaluation, alpha: float, mask: Optional[np.ndarray] = None) -> TuningResult:
    """Pick gamma from (a subset of) a grid evaluation."""
    idx = np.arange(len(evaluation.labels)) if mask is None else np.flatnonzero(mask)
    if idx.size == 0:
        raise EvalError(f"{spec.name}: no samples to tune on")
    trace = []
    for p, s, q in zip(evaluation.params, evaluation.success, evaluation.ssim):
        # mean over models of each model's ASR
        a = float(s[:, idx].mean(axis=1).mean())
        m = float(q[idx].mean())
        trace.append(TracePoint(p, a, m, m >= alpha))
    if spec.param_name is None:
        return TuningResult(spec.name, None, None, STATUS_FIXED, alpha, int(idx.size), trace, spec.describe(None))
    feasible = [t for t in trace if t.feasible]
    if not feasible:
        return TuningResult(spec.name, spec.param_name, None, STATUS_INFEASIBLE, alpha, int(idx.size), trace, spec.name)
    # grid ascends, so the first maximum is the smallest parameter
    best = max(feasible, key=lambda t: t.asr)
    return TuningResult(spec.name, spec.param_name, best.param, STATUS_OK, alpha, int(idx.size), trace, spec.describe(best.param))


def tune(spec: AttackSpec, surrogate, X, y, config: TuningConfig = TuningConfig(), seed: int = 0) -> TuningResult:
    """Grid search for the strongest attack setting that keeps mean SSIM >= alpha.

    ``surrogate`` is one model or a sequence of models (their mean ASR is
    maximised). Samples should be correctly classified and class-balanced.
    """
    return select(spec, evaluate_grid(spec, surrogate, X, y, config, seed), config.alpha)


def tune_per_class(
    spec: AttackSpec, surrogate, X, y, config: TuningConfig = TuningConfig(), seed: int = 0, classes: Sequence[int] = (0, 1)
) -> Dict[int, TuningResult]:
    """Separate gamma per true class, sharing one grid evaluation."""
    y = check_labels(y)
    for c in classes:
        if not np.any(y == c):
            raise EvalError(f"{spec.name}: no tuning samples of class {c}")
    evaluation = evaluate_grid(spec, surrogate, X, y, config, seed)
    out = {}
    for c in classes:
        res = select(spec, evaluation, config.alpha, evaluation.labels == c)
        res.positive_class = int(c)
        out[int(c)] = res
    return out

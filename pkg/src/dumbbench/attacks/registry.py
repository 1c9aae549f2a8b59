"""The thirteen attacks with their tunable parameter, grid and fixed settings."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from . import gradient, transforms
from .deepfool import deepfool
from .square import square_attack

MATHEMATICAL = "mathematical"
NON_MATHEMATICAL = "non-mathematical"

MATH_ATTACKS = ("FGSM", "BIM", "PGD", "RFGSM", "TIFGSM", "DeepFool", "Square")
NON_MATH_ATTACKS = ("BoxBlur", "GaussianNoise", "Grayscale", "Invert", "RandomBlackBox", "SaltPepper")


@dataclass(frozen=True)
class ParamGrid:
    """Inclusive arithmetic grid ``start, start + step, ..., stop``."""

    start: float
    stop: float
    step: float
    integer: bool = False

    def __post_init__(self):
        if not self.start < self.stop:
            raise ValueError(f"grid start {self.start} must be < stop {self.stop}")
        if self.step <= 0:
            raise ValueError(f"grid step must be > 0, got {self.step}")

    def values(self) -> list:
        n = int(round((self.stop - self.start) / self.step)) + 1
        vals = [round(self.start + k * self.step, 10) for k in range(n)]
        vals = [v for v in vals if v <= self.stop + 1e-9]
        return [int(round(v)) for v in vals] if self.integer else vals

    def to_dict(self) -> dict:
        return {"start": self.start, "stop": self.stop, "step": self.step, "integer": self.integer}

    @classmethod
    def from_dict(cls, d: dict) -> "ParamGrid":
        return cls(d["start"], d["stop"], d["step"], d.get("integer", False))


@dataclass
class AttackOutput:
    x_adv: np.ndarray
    info: dict = field(default_factory=dict)


@dataclass(frozen=True)
class AttackSpec:
    """One attack: its family, tunable parameter and fixed hyperparameters.

    ``runner(model, X, y, param, seed, **fixed)`` returns an :class:`AttackOutput`.
    Parameter-free attacks have ``param_name=None`` and ``grid=None``.
    """

    name: str
    family: str
    param_name: Optional[str]
    grid: Optional[ParamGrid]
    fixed: Tuple[Tuple[str, object], ...]
    runner: Callable = field(repr=False, compare=False)
    symbol: str = ""

    def __post_init__(self):
        if (self.family == MATHEMATICAL) != (self.name in MATH_ATTACKS):
            raise ValueError(f"{self.name}: family {self.family!r} inconsistent with its name")
        if (self.param_name is None) != (self.grid is None):
            raise ValueError(f"{self.name}: a tunable parameter needs a grid and vice versa")

    @property
    def is_mathematical(self) -> bool:
        return self.family == MATHEMATICAL

    @property
    def fixed_params(self) -> dict:
        return dict(self.fixed)

    def grid_values(self) -> list:
        return self.grid.values() if self.grid else [None]

    def with_grid(self, grid: Optional[ParamGrid]) -> "AttackSpec":
        return replace(self, grid=grid)

    def with_fixed(self, **overrides) -> "AttackSpec":
        merged = dict(self.fixed)
        unknown = set(overrides) - set(merged)
        if unknown:
            raise ValueError(f"{self.name}: unknown hyperparameters {sorted(unknown)}")
        merged.update(overrides)
        return replace(self, fixed=tuple(sorted(merged.items())))

    def generate(self, model, X, y, param=None, seed: int = 0) -> AttackOutput:
        if self.param_name is not None and param is None:
            raise ValueError(f"{self.name} needs a value for {self.param_name}")
        return self.runner(model, X, y, param, seed, **self.fixed_params)

    def apply(self, model, X, y, param=None, seed: int = 0) -> np.ndarray:
        return self.generate(model, X, y, param, seed).x_adv

    def describe(self, param) -> str:
        """Human-readable setting such as ``FGSM, ε = 0.1``."""
        if self.param_name is None:
            return self.name
        return f"{self.name}, {self.symbol or self.param_name} = {_fmt(param)}"


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):g}"


def _step(eps, step_size_ratio):
    return eps * step_size_ratio


def _run_fgsm(model, X, y, eps, seed):
    return AttackOutput(gradient.fgsm(model, X, y, eps))


def _run_bim(model, X, y, eps, seed, steps, step_size_ratio):
    return AttackOutput(gradient.bim(model, X, y, eps, steps, _step(eps, step_size_ratio)))


def _run_pgd(model, X, y, eps, seed, steps, step_size_ratio, random_start):
    return AttackOutput(gradient.pgd(model, X, y, eps, steps, _step(eps, step_size_ratio), random_start, seed))


def _run_rfgsm(model, X, y, eps, seed, steps, step_size_ratio):
    return AttackOutput(gradient.rfgsm(model, X, y, eps, steps, _step(eps, step_size_ratio), seed))


def _run_tifgsm(model, X, y, eps, seed, steps, step_size_ratio, kernel_size, kernel_sigma, momentum):
    out = gradient.tifgsm(model, X, y, eps, steps, _step(eps, step_size_ratio), kernel_size, kernel_sigma, momentum)
    return AttackOutput(out)


def _run_deepfool(model, X, y, overshoot, seed, max_iter):
    x_adv, flipped = deepfool(model, X, overshoot, max_iter)
    return AttackOutput(x_adv, {"flipped": flipped})


def _run_square(model, X, y, eps, seed, query_budget, p_init):
    res = square_attack(model.predict_proba, X, y, eps, query_budget, p_init, seed)
    return AttackOutput(res.x_adv, {"queries": res.queries})


def _run_blur(model, X, y, radius, seed):
    return AttackOutput(transforms.box_blur(X, radius))


def _run_noise(model, X, y, sigma, seed):
    return AttackOutput(transforms.gaussian_noise(X, sigma, seed))


def _run_gray(model, X, y, param, seed):
    return AttackOutput(transforms.grayscale(X))


def _run_invert(model, X, y, param, seed):
    return AttackOutput(transforms.invert(X))


def _run_box(model, X, y, size, seed):
    return AttackOutput(transforms.random_black_box(X, size, seed))


def _run_salt(model, X, y, amount, seed):
    return AttackOutput(transforms.salt_pepper(X, amount, seed))


EPS_GRID = ParamGrid(0.01, 0.3, 0.01)
OVERSHOOT_GRID = ParamGrid(10, 100, 1, integer=True)
# alternative overshoot grid matching the tuned values shown alongside the example images
OVERSHOOT_GRID_APPENDIX = ParamGrid(0.01, 1.0, 0.01)
_ITER = (("step_size_ratio", 0.25), ("steps", 10))


def _build() -> Dict[str, AttackSpec]:
    M, N = MATHEMATICAL, NON_MATHEMATICAL
    specs = [
        AttackSpec("FGSM", M, "eps", EPS_GRID, (), _run_fgsm, "ε"),
        AttackSpec("BIM", M, "eps", EPS_GRID, _ITER, _run_bim, "ε"),
        AttackSpec("PGD", M, "eps", EPS_GRID, tuple(sorted(_ITER + (("random_start", True),))), _run_pgd, "ε"),
        AttackSpec("RFGSM", M, "eps", EPS_GRID, _ITER, _run_rfgsm, "ε"),
        AttackSpec(
            "TIFGSM",
            M,
            "eps",
            EPS_GRID,
            tuple(sorted(_ITER + (("kernel_size", 5), ("kernel_sigma", 1.5), ("momentum", 1.0)))),
            _run_tifgsm,
            "ε",
        ),
        AttackSpec("DeepFool", M, "overshoot", OVERSHOOT_GRID, (("max_iter", 50),), _run_deepfool, "overshoot"),
        AttackSpec("Square", M, "eps", EPS_GRID, (("p_init", 0.8), ("query_budget", 500)), _run_square, "ε"),
        AttackSpec("BoxBlur", N, "radius", ParamGrid(1, 8, 1, integer=True), (), _run_blur, "radius"),
        AttackSpec("GaussianNoise", N, "sigma", ParamGrid(0.005, 0.2, 0.005), (), _run_noise, "σ"),
        AttackSpec("Grayscale", N, None, None, (), _run_gray),
        AttackSpec("Invert", N, None, None, (), _run_invert),
        AttackSpec("RandomBlackBox", N, "size", ParamGrid(2, 24, 2, integer=True), (), _run_box, "size"),
        AttackSpec("SaltPepper", N, "amount", ParamGrid(0.01, 0.3, 0.01), (), _run_salt, "amount"),
    ]
    return {s.name: s for s in specs}


ATTACKS: Dict[str, AttackSpec] = _build()


def get_attack(name: str) -> AttackSpec:
    try:
        return ATTACKS[name]
    except KeyError:
        raise KeyError(f"unknown attack {name!r}; expected one of {sorted(ATTACKS)}") from None

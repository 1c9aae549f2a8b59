"""Run configuration: one JSON document, every default written out."""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

from .attacks.registry import ATTACKS, OVERSHOOT_GRID, OVERSHOOT_GRID_APPENDIX, AttackSpec, ParamGrid
from .errors import ConfigError
from .models.network import ARCHITECTURES
from .models.training import TrainingConfig
from .synthdata.generate import SOURCE_IDS, TASK_IDS
from .synthdata.splits import BALANCE_LEVELS
from .tuning import TuningConfig

# settings that change how a run executes but not what it computes
RUNTIME_KEYS = ("jobs", "out")


@dataclass
class RunConfig:
    tasks: List[str] = field(default_factory=lambda: list(TASK_IDS))
    sources: List[str] = field(default_factory=lambda: list(SOURCE_IDS))
    balances: List[str] = field(default_factory=lambda: list(BALANCE_LEVELS))
    archs: List[str] = field(default_factory=lambda: list(ARCHITECTURES))
    attacks: List[str] = field(default_factory=lambda: list(ATTACKS))
    image_size: int = 32
    per_class_count: int = 1000
    split_ratios: List[float] = field(default_factory=lambda: [0.7, 0.1, 0.2])
    minority_class: int = 0
    training: Dict[str, float] = field(default_factory=lambda: {k: v for k, v in asdict(TrainingConfig()).items() if k != "seed"})
    alpha: float = 0.4
    n_samples: int = 100
    deepfool_grid: str = "default"
    grids: Dict[str, dict] = field(default_factory=dict)
    hyperparams: Dict[str, dict] = field(default_factory=dict)
    mismatch_balance: str = "strong"
    focus_attack: str = "TIFGSM"
    seed: int = 0
    jobs: int = 1
    out: str = "runs"

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            cfg = cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path: Union[str, Path, None]) -> "RunConfig":
        if path is None:
            cfg = cls()
            cfg.validate()
            return cfg
        try:
            d = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(d)

    def to_dict(self) -> dict:
        return asdict(self)

    def content(self) -> dict:
        return {k: v for k, v in self.to_dict().items() if k not in RUNTIME_KEYS}

    def config_hash(self) -> str:
        blob = json.dumps(self.content(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def _check_subset(self, name: str, values, allowed) -> None:
        if not isinstance(values, list) or not values:
            raise ConfigError(f"{name} must be a non-empty list")
        bad = [v for v in values if v not in allowed]
        if bad:
            raise ConfigError(f"unknown {name}: {bad}; expected a subset of {list(allowed)}")
        if len(set(values)) != len(values):
            raise ConfigError(f"duplicate entries in {name}")

    def validate(self) -> None:
        self._check_subset("tasks", self.tasks, TASK_IDS)
        self._check_subset("sources", self.sources, SOURCE_IDS)
        self._check_subset("balances", self.balances, BALANCE_LEVELS)
        self._check_subset("archs", self.archs, ARCHITECTURES)
        self._check_subset("attacks", self.attacks, ATTACKS)
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an explicit unsigned 64-bit integer")
        if not 0 < self.alpha <= 1:
            raise ConfigError(f"alpha must lie in (0, 1], got {self.alpha}")
        if self.n_samples < 2 or self.n_samples % 2:
            raise ConfigError("n_samples must be an even number >= 2")
        if self.image_size < 16 or self.image_size % 8:
            raise ConfigError("image_size must be a multiple of 8 and >= 16")
        if self.per_class_count < 50:
            raise ConfigError("per_class_count must be >= 50")
        if len(self.split_ratios) != 3 or abs(sum(self.split_ratios) - 1) > 1e-9 or min(self.split_ratios) < 0:
            raise ConfigError("split_ratios must be three non-negative numbers summing to 1")
        if self.minority_class not in (0, 1):
            raise ConfigError("minority_class must be 0 or 1")
        if self.deepfool_grid not in ("default", "appendix"):
            raise ConfigError("deepfool_grid must be 'default' or 'appendix'")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        if self.mismatch_balance not in BALANCE_LEVELS:
            raise ConfigError(f"unknown mismatch_balance {self.mismatch_balance!r}")
        if self.focus_attack not in ATTACKS:
            raise ConfigError(f"unknown focus_attack {self.focus_attack!r}")
        if any(not ATTACKS[a].is_mathematical for a in self.attacks) and "balanced" not in self.balances:
            raise ConfigError("model-free attacks are tuned on balanced models; include 'balanced' in balances")
        try:
            self.training_config()
            self.tuning_config()
            self.attack_specs()
        except (TypeError, ValueError, KeyError) as exc:
            raise ConfigError(str(exc)) from exc

    def training_config(self) -> TrainingConfig:
        return TrainingConfig(seed=self.seed, **self.training)

    def tuning_config(self) -> TuningConfig:
        grids = {name: ParamGrid.from_dict(g) for name, g in self.grids.items()}
        if "DeepFool" not in grids:
            grids["DeepFool"] = OVERSHOOT_GRID if self.deepfool_grid == "default" else OVERSHOOT_GRID_APPENDIX
        for name in grids:
            if name not in ATTACKS or ATTACKS[name].param_name is None:
                raise ValueError(f"grid given for attack without a tunable parameter: {name}")
        return TuningConfig(alpha=self.alpha, n_samples=self.n_samples, grids=grids)

    def attack_specs(self) -> List[AttackSpec]:
        specs = []
        tuning = None
        for name in self.attacks:
            spec = ATTACKS[name]
            if name in self.hyperparams:
                spec = spec.with_fixed(**self.hyperparams[name])
            if spec.param_name is not None:
                tuning = tuning or self.tuning_config()
                spec = spec.with_grid(tuning.grids.get(name, spec.grid))
            specs.append(spec)
        unknown = set(self.hyperparams) - set(ATTACKS)
        if unknown:
            raise ValueError(f"hyperparams for unknown attacks: {sorted(unknown)}")
        return specs

    @property
    def models_per_task(self) -> int:
        return len(self.sources) * len(self.balances) * len(self.archs)

    def split_ratios_tuple(self) -> Tuple[float, float, float]:
        return tuple(self.split_ratios)

    def run_dir(self, out: Optional[str] = None) -> Path:
        return Path(out or self.out) / self.config_hash()

"""Training one cell of the model matrix and scoring its baseline."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Optional, Tuple

import numpy as np

from ..synthdata.splits import BALANCE_LEVELS, BalanceLevel, DatasetSplit, rebalance
from ..validation import check_images
from .classifier import CNNClassifier
from .metrics import Metrics, f1_score


@dataclass(frozen=True)
class Provenance:
    task: str
    source: str
    arch: str
    balance: str
    seed: int

    @property
    def model_id(self) -> str:
        return f"{self.task}-{self.source}-{self.arch}-{self.balance}"

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class TrainingConfig:
    epochs: int = 20
    batch_size: int = 32
    learning_rate: float = 0.01
    momentum: float = 0.9
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")


@dataclass
class ModelRecord:
    provenance: Provenance
    model: CNNClassifier
    baseline: Optional[Metrics] = None
    parameter_hash: str = ""
    history: list = field(default_factory=list)

    @property
    def model_id(self) -> str:
        return self.provenance.model_id

    @property
    def arch(self) -> str:
        return self.provenance.arch


def derive_seed(*parts) -> int:
    """Stable 63-bit seed from arbitrary str/int parts."""
    words = []
    for p in parts:
        if isinstance(p, str):
            words.extend(p.encode("utf-8"))
            words.append(0x100)
        else:
            words.append(int(p))
    return int(np.random.SeedSequence(words).generate_state(2, dtype=np.uint32).view(np.uint64)[0] >> 1)


def predict(model: CNNClassifier, batch) -> Tuple[np.ndarray, np.ndarray]:
    """Labels and class probabilities; label ties go to the lower class index."""
    proba = model.predict_proba(batch)
    return np.argmax(proba, axis=1), proba


def evaluate_baseline(model: CNNClassifier, test, positive_class: int = 1) -> Metrics:
    X = check_images(test.X)
    return f1_score(model.predict(X), test.y, positive_class)


def train(
    arch: str,
    split: DatasetSplit,
    balance_level: BalanceLevel,
    config: TrainingConfig,
    minority_class: int = 0,
) -> ModelRecord:
    """Rebalance the training part, fit with validation-F1 checkpointing, score on test."""
    if isinstance(balance_level, str):
        balance_level = BALANCE_LEVELS[balance_level]
    prov = Provenance(
        task=split.provenance.get("task", "?"),
        source=split.provenance.get("source", "?"),
        arch=arch,
        balance=balance_level.label,
        seed=config.seed,
    )
    train_set = rebalance(split.train, balance_level, minority_class, seed=derive_seed(config.seed, prov.model_id, "rebalance"))
    clf = CNNClassifier(
        arch=arch,
        epochs=config.epochs,
        batch_size=config.batch_size,
        learning_rate=config.learning_rate,
        momentum=config.momentum,
        random_state=derive_seed(config.seed, prov.model_id, "fit"),
    )
    clf.fit(train_set.X, train_set.y, split.validation.X, split.validation.y)
    record = ModelRecord(prov, clf, history=list(clf.history_))
    record.baseline = evaluate_baseline(clf, split.test)
    record.parameter_hash = clf.parameter_hash()
    return record

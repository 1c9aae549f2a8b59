"""Duplicate removal, stratified splitting and minority undersampling."""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Sequence, Tuple

import numpy as np

from ..errors import BalanceError, SplitError
from .generate import ImageSet


@dataclass(frozen=True)
class BalanceLevel:
    label: str
    minority_fraction: float

    def __post_init__(self):
        if not 0 < self.minority_fraction <= 0.5:
            raise ValueError("minority_fraction must lie in (0, 0.5]")

    @property
    def ratio_name(self) -> str:
        minority = round(self.minority_fraction * 100)
        return f"{minority}/{100 - minority}"


BALANCE_LEVELS: Dict[str, BalanceLevel] = {
    "balanced": BalanceLevel("balanced", 0.5),
    "weak": BalanceLevel("weak", 0.4),
    "medium": BalanceLevel("medium", 0.3),
    "strong": BalanceLevel("strong", 0.2),
}


def content_hash(image: np.ndarray) -> str:
    arr = np.ascontiguousarray(image, dtype=np.float32)
    h = hashlib.sha256(repr(arr.shape).encode())
    h.update(arr.tobytes())
    return h.hexdigest()


def deduplicate(images: ImageSet) -> ImageSet:
    """Drop exact content duplicates, keeping the first occurrence."""
    seen = set()
    keep = []
    for i, img in enumerate(images.X):
        h = content_hash(img)
        if h not in seen:
            seen.add(h)
            keep.append(i)
    keep = np.asarray(keep, dtype=np.int64)
    return ImageSet(images.X[keep], images.y[keep], dict(images.provenance))


def largest_remainder(total: int, ratios: Sequence[float]) -> List[int]:
    """Integer apportionment of ``total`` by ``ratios`` (Hamilton's method)."""
    fr = [Fraction(r).limit_denominator(10**6) for r in ratios]
    if any(r < 0 for r in fr) or sum(fr) != 1:
        raise SplitError(f"ratios {list(ratios)} must be non-negative and sum to 1")
    quotas = [total * r for r in fr]
    counts = [math.floor(q) for q in quotas]
    leftover = total - sum(counts)
    order = sorted(range(len(fr)), key=lambda i: (-(quotas[i] - counts[i]), i))
    for i in order[:leftover]:
        counts[i] += 1
    return counts


@dataclass
class DatasetSplit:
    train: ImageSet
    validation: ImageSet
    test: ImageSet
    provenance: dict = field(default_factory=dict)

    def parts(self) -> Dict[str, ImageSet]:
        return {"train": self.train, "validation": self.validation, "test": self.test}


def split(images: ImageSet, ratios: Tuple[float, float, float] = (0.7, 0.1, 0.2), seed: int = 0) -> DatasetSplit:
    """Seeded per-class split into train/validation/test.

    Validation and test receive the same number of images from each class,
    apportioned from the smallest class; any surplus of a larger class goes to
    the training part.
    """
    labels = np.unique(images.y)
    if len(labels) != 2:
        raise SplitError(f"expected two classes, found {labels.tolist()}")
    per_class = {int(c): np.flatnonzero(images.y == c) for c in labels}
    smallest = min(len(v) for v in per_class.values())
    counts = largest_remainder(smallest, ratios)
    for r, c in zip(ratios, counts):
        if r > 0 and c == 0:
            raise SplitError(f"class too small ({smallest} images) for ratios {tuple(ratios)}")
    rng = np.random.default_rng(seed)
    parts: List[List[np.ndarray]] = [[], [], []]
    for c in sorted(per_class):
        idx = rng.permutation(per_class[c])
        n_val, n_test = counts[1], counts[2]
        n_train = len(idx) - n_val - n_test
        parts[0].append(idx[:n_train])
        parts[1].append(idx[n_train : n_train + n_val])
        parts[2].append(idx[n_train + n_val :])
    prov = dict(images.provenance)
    prov["split_seed"] = int(seed)
    sets = []
    for name, chunks in zip(("train", "validation", "test"), parts):
        idx = np.concatenate(chunks)
        sets.append(ImageSet(images.X[idx], images.y[idx], {**prov, "part": name}))
    return DatasetSplit(*sets, provenance=prov)


def minority_target(majority_count: int, level: BalanceLevel) -> int:
    """ceil(majority * p / (1 - p)) computed exactly."""
    p = Fraction(level.minority_fraction).limit_denominator(1000)
    return math.ceil(majority_count * p / (1 - p))


def rebalance(train: ImageSet, level: BalanceLevel, minority_class: int = 0, seed: int = 0) -> ImageSet:
    """Randomly undersample the minority class so it makes up ``level.minority_fraction``.

    The majority class is kept whole and the relative order of kept samples is
    preserved.
    """
    if minority_class not in (0, 1):
        raise BalanceError(f"minority_class must be 0 or 1, got {minority_class}")
    minority_idx = np.flatnonzero(train.y == minority_class)
    majority_idx = np.flatnonzero(train.y != minority_class)
    target = minority_target(len(majority_idx), level)
    if target > len(minority_idx):
        raise BalanceError(
            f"{level.label} needs {target} minority samples, only {len(minority_idx)} available"
        )
    rng = np.random.default_rng(seed)
    chosen = np.sort(rng.choice(minority_idx, size=target, replace=False))
    keep = np.sort(np.concatenate([chosen, majority_idx]))
    prov = {**train.provenance, "balance": level.label, "minority_class": minority_class}
    return ImageSet(train.X[keep], train.y[keep], prov)

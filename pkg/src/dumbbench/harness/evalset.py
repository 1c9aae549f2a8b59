"""Choosing the clean samples an attack is allowed to perturb."""
from __future__ import annotations

from typing import Sequence, Tuple

import numpy as np

from ..errors import EvalPoolExhaustedError
from ..validation import check_images_labels


def correct_mask(models, X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """True where every model in ``models`` predicts the true label."""
    if not isinstance(models, (list, tuple)):
        models = [models]
    mask = np.ones(len(y), dtype=bool)
    for m in models:
        mask &= np.asarray(m.predict(X)) == y
    return mask


def select_eval_set(models, test, n: int, seed: int = 0, classes: Sequence[int] = (0, 1)) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``n / 2`` correctly classified test samples per class, chosen with ``seed``.

    ``models`` is the generating model or a list of models that must all be
    correct. Returns ``(X, y, indices into test)``, class 0 first, each class
    in ascending index order.
    """
    if n < len(classes) or n % len(classes):
        raise ValueError(f"n must be a positive multiple of {len(classes)}, got {n}")
    X, y = check_images_labels(test.X, test.y)
    ok = correct_mask(models, X, y)
    rng = np.random.default_rng(seed)
    per_class = n // len(classes)
    chosen = []
    for c in classes:
        pool = np.flatnonzero(ok & (y == c))
        if pool.size < per_class:
            raise EvalPoolExhaustedError(f"class {c}: {pool.size} correctly classified samples, need {per_class}")
        chosen.append(np.sort(rng.choice(pool, size=per_class, replace=False)))
    idx = np.concatenate(chosen)
    return X[idx], y[idx], idx

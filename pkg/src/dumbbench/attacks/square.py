"""Score-based Square attack (max-norm variant).

The attack only sees class probabilities. Each sample keeps its own random
stream, query counter and best iterate, so results do not depend on how
samples are batched.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..validation import check_images, check_labels


def p_schedule(p_init: float, it: int, budget: int) -> float:
    """Fraction of pixels changed per proposal; halves at fixed budget fractions."""
    it = int(it / budget * 10000)
    for bound, div in ((10, 1), (50, 2), (200, 4), (500, 8), (1000, 16), (2000, 32), (4000, 64), (6000, 128), (8000, 256)):
        if it <= bound:
            return p_init / div
    return p_init / 512


def margin(proba: np.ndarray, y: np.ndarray) -> np.ndarray:
    """True-class probability minus the best other; negative means misclassified."""
    idx = np.arange(len(y))
    true = proba[idx, y]
    other = proba.copy()
    other[idx, y] = -np.inf
    return true - other.max(axis=1)


@dataclass
class SquareResult:
    x_adv: np.ndarray
    queries: np.ndarray
    margins: np.ndarray


def square_attack(
    score_oracle,
    X,
    y,
    eps: float,
    query_budget: int = 500,
    p_init: float = 0.8,
    seed: int = 0,
) -> SquareResult:
    """Random search over square patches of +-eps.

    ``score_oracle(batch) -> probabilities`` is the only access to the model.
    The clean input costs one query. The vertical-stripe initialisation and
    every later proposal are kept only when they lower the margin, and a
    sample stops as soon as it is misclassified or its budget is spent.
    """
    if query_budget < 1:
        raise ValueError(f"query_budget must be >= 1, got {query_budget}")
    if eps < 0:
        raise ValueError(f"eps must be >= 0, got {eps}")
    X = np.asarray(X)
    X = check_images(X, dtype=X.dtype if X.dtype.kind == "f" else np.float32)
    y = check_labels(y, X.shape[0])
    n, h, w, c = X.shape
    e = X.dtype.type(eps)
    rngs = [np.random.default_rng([int(seed), i]) for i in range(n)]

    x_best = X.copy()
    best = margin(score_oracle(X), y)
    queries = np.ones(n, dtype=np.int64)
    if e == 0:
        return SquareResult(x_best, queries, best)

    def query(idx: np.ndarray, candidates: np.ndarray) -> None:
        m = margin(score_oracle(candidates), y[idx])
        queries[idx] += 1
        better = m < best[idx]
        x_best[idx[better]] = candidates[better]
        best[idx[better]] = m[better]

    active = np.flatnonzero((best >= 0) & (queries < query_budget))
    if active.size:
        stripes = np.stack([rngs[i].choice([-e, e], size=(1, w, c)) for i in active]).astype(X.dtype)
        query(active, np.clip(X[active] + stripes, 0, 1))

    while True:
        active = np.flatnonzero((best >= 0) & (queries < query_budget))
        if active.size == 0:
            break
        candidates = x_best[active].copy()
        for row, i in enumerate(active):
            # queries[i] - 1 proposals have been scored so far for this sample
            p = p_schedule(p_init, int(queries[i]) - 1, query_budget)
            side = int(min(max(round(np.sqrt(p * h * w)), 1), h - 1))
            top = rngs[i].integers(0, h - side + 1)
            left = rngs[i].integers(0, w - side + 1)
            delta = rngs[i].choice([-e, e], size=(1, 1, c)).astype(X.dtype)
            window = X[i, top : top + side, left : left + side]
            candidates[row, top : top + side, left : left + side] = np.clip(window + delta, 0, 1)
        query(active, candidates)
    return SquareResult(x_best, queries, best)

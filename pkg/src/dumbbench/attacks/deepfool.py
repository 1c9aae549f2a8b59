"""Binary DeepFool on the logit difference ``f1 - f0``."""
from __future__ import annotations

from typing import Tuple

import numpy as np

from ..validation import check_images

_TINY = 1e-12


def deepfool(model, X, overshoot: float = 0.02, max_iter: int = 50) -> Tuple[np.ndarray, np.ndarray]:
    """Move each sample across the linearised decision boundary.

    ``model`` exposes ``logit_difference(X) -> (d, grad_d)`` with ``d = f1 - f0``.
    At every iteration the minimal step to the linearised boundary,
    ``r = -d / ||grad d||^2 * grad d``, is added to the running total and the
    candidate ``clamp(x + (1 + overshoot) * r_total)`` is re-scored. A sample
    stops once its label flips.

    Returns
    -------
    x_adv : array like ``X``
    flipped : bool array of shape (N,); False marks samples still on the
        original side after ``max_iter`` iterations (their last iterate is
        returned).
    """
    if max_iter < 1:
        raise ValueError(f"max_iter must be >= 1, got {max_iter}")
    if overshoot < 0:
        raise ValueError(f"overshoot must be >= 0, got {overshoot}")
    X = np.asarray(X)
    X = check_images(X, dtype=X.dtype if X.dtype.kind == "f" else np.float32)
    scale = X.dtype.type(1 + overshoot)
    d, g = model.logit_difference(X)
    original = (d > 0).astype(np.int64)  # ties go to class 0
    r_total = np.zeros_like(X)
    x_adv = X.copy()
    flipped = np.zeros(len(X), dtype=bool)
    active = np.arange(len(X))
    for _ in range(max_iter):
        if active.size == 0:
            break
        norm2 = np.sum(g.astype(np.float64) ** 2, axis=(1, 2, 3))
        coef = -d.astype(np.float64) / np.maximum(norm2, _TINY)
        r_total[active] += (coef[:, None, None, None] * g).astype(X.dtype)
        x_adv[active] = np.clip(X[active] + scale * r_total[active], 0, 1)
        # the scored iterate also supplies the next linearisation
        d, g = model.logit_difference(x_adv[active])
        keep = (d > 0).astype(np.int64) == original[active]
        flipped[active[~keep]] = True
        active, d, g = active[keep], d[keep], g[keep]
    return x_adv, flipped

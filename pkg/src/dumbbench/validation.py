"""Input validation helpers in the spirit of ``sklearn.utils.validation``."""
from __future__ import annotations

from typing import Optional, Tuple

import numpy as np

from .errors import ShapeError

RANGE_SLACK = 1e-6


def check_images(X, *, allow_single: bool = False, dtype=np.float32, check_range: bool = True) -> np.ndarray:
    """Return ``X`` as an NHWC float array with values in [0, 1].

    With ``allow_single`` a lone HxWxC image is promoted to a batch of one.
    """
    X = np.asarray(X)
    if X.dtype.kind not in "fiu":
        raise ShapeError(f"expected a numeric array, got dtype {X.dtype}")
    if X.ndim == 3 and allow_single:
        X = X[None]
    if X.ndim != 4:
        raise ShapeError(f"expected an image batch (N, H, W, C), got shape {X.shape}")
    if dtype is not None and X.dtype != dtype:
        X = X.astype(dtype)
    if check_range and X.size and (X.min() < -RANGE_SLACK or X.max() > 1 + RANGE_SLACK):
        raise ValueError(f"image values must lie in [0, 1], got [{X.min()}, {X.max()}]")
    return X


def check_labels(y, n_samples: Optional[int] = None, n_classes: int = 2) -> np.ndarray:
    y = np.asarray(y)
    if y.ndim == 0:
        y = y[None]
    if y.ndim != 1:
        raise ShapeError(f"labels must be one-dimensional, got shape {y.shape}")
    if y.size and not np.all(np.equal(np.mod(y, 1), 0)):
        raise ValueError("labels must be integers")
    y = y.astype(np.int64)
    if n_samples is not None and y.shape[0] != n_samples:
        raise ShapeError(f"{y.shape[0]} labels for {n_samples} samples")
    if y.size and (y.min() < 0 or y.max() >= n_classes):
        raise ValueError(f"labels must lie in [0, {n_classes})")
    return y


def check_images_labels(X, y, **kwargs) -> Tuple[np.ndarray, np.ndarray]:
    X = check_images(X, **kwargs)
    return X, check_labels(y, X.shape[0])


def check_same_shape(a: np.ndarray, b: np.ndarray) -> None:
    if np.shape(a) != np.shape(b):
        raise ShapeError(f"shape mismatch: {np.shape(a)} vs {np.shape(b)}")

"""Structural similarity (SSIM) between images in [0, 1].

A normalised Gaussian window slides over the valid region only (no padding);
the score is the mean of the local SSIM map over window positions and
channels.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import EmptyEvalError, ShapeError


@dataclass(frozen=True)
class SsimConfig:
    window_size: int = 11
    sigma: float = 1.5
    k1: float = 0.01
    k2: float = 0.03
    dynamic_range: float = 1.0

    @property
    def c1(self) -> float:
        return (self.k1 * self.dynamic_range) ** 2

    @property
    def c2(self) -> float:
        return (self.k2 * self.dynamic_range) ** 2

    def window_1d(self) -> np.ndarray:
        r = np.arange(self.window_size, dtype=np.float64) - (self.window_size - 1) / 2
        g = np.exp(-(r**2) / (2 * self.sigma**2))
        return g / g.sum()

    def window(self) -> np.ndarray:
        g = self.window_1d()
        return np.outer(g, g)


DEFAULT_SSIM = SsimConfig()


def _filter(batch: np.ndarray, g: np.ndarray) -> np.ndarray:
    # separable valid-region filtering of (N, H, W, C) along H then W
    out = sliding_window_view(batch, g.size, axis=1) @ g
    return sliding_window_view(out, g.size, axis=2) @ g


def ssim_batch(X, Y, config: SsimConfig = DEFAULT_SSIM) -> np.ndarray:
    """Per-image SSIM for two equally shaped batches (N, H, W, C)."""
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if X.shape != Y.shape:
        raise ShapeError(f"ssim: {X.shape} vs {Y.shape}")
    if X.ndim != 4:
        raise ShapeError(f"ssim_batch expects (N, H, W, C), got {X.shape}")
    if min(X.shape[1:3]) < config.window_size:
        raise ShapeError(f"ssim: image {X.shape[1:3]} smaller than window {config.window_size}")
    g = config.window_1d()
    mu_x, mu_y = _filter(X, g), _filter(Y, g)
    var_x = _filter(X * X, g) - mu_x**2
    var_y = _filter(Y * Y, g) - mu_y**2
    cov = _filter(X * Y, g) - mu_x * mu_y
    c1, c2 = config.c1, config.c2
    smap = ((2 * mu_x * mu_y + c1) * (2 * cov + c2)) / ((mu_x**2 + mu_y**2 + c1) * (var_x + var_y + c2))
    return smap.mean(axis=(1, 2, 3))


def ssim(x, y, config: SsimConfig = DEFAULT_SSIM) -> float:
    """SSIM of two images of identical shape (H, W, C) or (H, W)."""
    x = np.asarray(x)
    y = np.asarray(y)
    if x.shape != y.shape:
        raise ShapeError(f"ssim: {x.shape} vs {y.shape}")
    if x.ndim == 2:
        x, y = x[..., None], y[..., None]
    return float(ssim_batch(x[None], y[None], config)[0])


def mean_ssim(originals, perturbed, config: SsimConfig = DEFAULT_SSIM) -> float:
    if len(originals) != len(perturbed):
        raise ShapeError(f"{len(originals)} originals vs {len(perturbed)} perturbed images")
    if len(originals) == 0:
        raise EmptyEvalError("mean_ssim of no images")
    return float(np.mean(ssim_batch(originals, perturbed, config)))

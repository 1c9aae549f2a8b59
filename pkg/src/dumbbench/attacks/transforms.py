"""Model-free image transformations used as non-mathematical attacks.

All take a batch (N, H, W, C) in [0, 1] and return a new array of the same
shape and dtype. Random transforms draw from a single generator seeded with
``seed`` and consume it image by image, so output is a pure function of the
inputs and the seed.
"""
from __future__ import annotations

import numpy as np

from ..validation import check_images

LUMA = (0.299, 0.587, 0.114)


def _prepare(X, check_range: bool = True) -> np.ndarray:
    X = np.asarray(X)
    return check_images(X, dtype=X.dtype if X.dtype.kind == "f" else np.float32, check_range=check_range)


def round_half_up(v: float) -> int:
    return int(np.floor(v + 0.5))


def box_blur(X, radius: int) -> np.ndarray:
    """Mean over a (2r+1)^2 window; borders repeat the edge pixels."""
    radius = int(radius)
    if radius < 0:
        raise ValueError(f"radius must be >= 0, got {radius}")
    # a window mean never leaves the input range, so any range is accepted
    X = _prepare(X, check_range=False)
    if radius == 0:
        return X.copy()
    k = 2 * radius + 1
    padded = np.pad(X.astype(np.float64), ((0, 0), (radius, radius), (radius, radius), (0, 0)), mode="edge")
    # summed-area table with a leading zero row and column
    sat = np.zeros((X.shape[0], padded.shape[1] + 1, padded.shape[2] + 1, X.shape[3]))
    sat[:, 1:, 1:] = padded.cumsum(axis=1).cumsum(axis=2)
    h, w = X.shape[1:3]
    total = sat[:, k : k + h, k : k + w] - sat[:, :h, k : k + w] - sat[:, k : k + h, :w] + sat[:, :h, :w]
    # clipping to the input range removes summed-area round-off
    return np.clip(total / (k * k), X.min(), X.max()).astype(X.dtype)


def gaussian_noise(X, sigma: float, seed: int = 0) -> np.ndarray:
    """Additive zero-mean Gaussian noise, clamped to [0, 1]."""
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    X = _prepare(X)
    if sigma == 0:
        return X.copy()
    noise = np.random.default_rng(seed).normal(0.0, sigma, X.shape)
    return np.clip(X + noise, 0, 1).astype(X.dtype)


def grayscale(X) -> np.ndarray:
    """Luminance replicated to every channel (RGB input)."""
    X = _prepare(X)
    if X.shape[-1] != 3:
        raise ValueError("grayscale expects RGB images")
    lum = X.astype(np.float64) @ np.array(LUMA)
    return np.clip(np.repeat(lum[..., None], 3, axis=-1), 0, 1).astype(X.dtype)


def invert(X) -> np.ndarray:
    X = _prepare(X)
    return (1 - X).astype(X.dtype)


def black_box_position(rng: np.random.Generator, h: int, w: int, size: int):
    """Top-left corner of a ``size`` square whose centre falls in the central half."""
    cy = rng.uniform(h / 4, 3 * h / 4)
    cx = rng.uniform(w / 4, 3 * w / 4)
    top = int(np.clip(np.floor(cy - size / 2), 0, h - size))
    left = int(np.clip(np.floor(cx - size / 2), 0, w - size))
    return top, left


def random_black_box(X, size: int, seed: int = 0) -> np.ndarray:
    """Zero out one ``size`` x ``size`` square per image."""
    X = _prepare(X)
    size = int(size)
    h, w = X.shape[1:3]
    if not 0 <= size <= min(h, w):
        raise ValueError(f"box size must lie in [0, {min(h, w)}], got {size}")
    out = X.copy()
    if size == 0:
        return out
    rng = np.random.default_rng(seed)
    for img in out:
        top, left = black_box_position(rng, h, w, size)
        img[top : top + size, left : left + size] = 0
    return out


def salt_pepper(X, amount: float, seed: int = 0) -> np.ndarray:
    """Set ``round(amount * H * W)`` pixels per image to white (half) or black (rest)."""
    if not 0 <= amount <= 1:
        raise ValueError(f"amount must lie in [0, 1], got {amount}")
    X = _prepare(X)
    h, w = X.shape[1:3]
    k = round_half_up(amount * h * w)
    out = X.copy()
    if k == 0:
        return out
    rng = np.random.default_rng(seed)
    for img in out:
        flat = img.reshape(h * w, -1)
        pos = rng.choice(h * w, size=k, replace=False)
        flat[pos[: k // 2]] = 1
        flat[pos[k // 2 :]] = 0
    return out

"""Gradient-sign attacks on the cross-entropy loss.

All functions take a batch ``X`` of shape (N, H, W, C) with values in [0, 1]
and a model exposing ``loss_gradient(X, y)`` (per-sample input gradients of
the cross-entropy loss). Outputs keep the input dtype and stay inside
``[0, 1]`` and the max-norm ball of radius ``eps`` around ``X``.
"""
from __future__ import annotations

from typing import Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..validation import check_images, check_labels


def _prepare(X, y):
    X = np.asarray(X)
    X = check_images(X, dtype=X.dtype if X.dtype.kind == "f" else np.float32)
    return X, check_labels(y, X.shape[0])


def _check_eps(eps: float) -> None:
    if eps < 0:
        raise ValueError(f"eps must be >= 0, got {eps}")


def _vanishes(eps, X: np.ndarray) -> bool:
    # an eps that rounds to zero in the image dtype cannot move any pixel
    return X.dtype.type(eps) == 0


def _check_iterative(steps: int, step_size: float) -> None:
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    if step_size <= 0:
        raise ValueError(f"step_size must be > 0, got {step_size}")


def _sign_step(x: np.ndarray, direction: np.ndarray, step) -> np.ndarray:
    return np.clip(x + x.dtype.type(step) * np.sign(direction).astype(x.dtype), 0, 1)


def _project(x_adv: np.ndarray, x: np.ndarray, eps) -> np.ndarray:
    e = x.dtype.type(eps)
    return np.clip(x_adv, x - e, x + e)


def fgsm(model, X, y, eps: float) -> np.ndarray:
    """One signed-gradient step of size ``eps``."""
    _check_eps(eps)
    X, y = _prepare(X, y)
    if _vanishes(eps, X):
        return X.copy()
    return _sign_step(X, model.loss_gradient(X, y), eps)


def _iterate(model, X, y, x_adv, eps, steps, step_size):
    for _ in range(steps):
        x_adv = _project(_sign_step(x_adv, model.loss_gradient(x_adv, y), step_size), X, eps)
    return x_adv


def bim(model, X, y, eps: float, steps: int = 10, step_size: Optional[float] = None) -> np.ndarray:
    """Basic iterative method: repeated sign steps projected onto the eps-ball."""
    _check_eps(eps)
    step_size = eps / 4 if step_size is None else step_size
    X, y = _prepare(X, y)
    if _vanishes(eps, X):
        return X.copy()
    _check_iterative(steps, step_size)
    return _iterate(model, X, y, X, eps, steps, step_size)


def pgd(
    model,
    X,
    y,
    eps: float,
    steps: int = 10,
    step_size: Optional[float] = None,
    random_start: bool = True,
    seed: int = 0,
) -> np.ndarray:
    """Projected gradient descent with an optional uniform start in the eps-ball."""
    _check_eps(eps)
    step_size = eps / 4 if step_size is None else step_size
    X, y = _prepare(X, y)
    if _vanishes(eps, X):
        return X.copy()
    _check_iterative(steps, step_size)
    x_adv = X
    if random_start:
        rng = np.random.default_rng(seed)
        noise = rng.uniform(-eps, eps, X.shape).astype(X.dtype)
        x_adv = _project(np.clip(X + noise, 0, 1), X, eps)
    return _iterate(model, X, y, x_adv, eps, steps, step_size)


def rfgsm(model, X, y, eps: float, steps: int = 10, step_size: Optional[float] = None, seed: int = 0) -> np.ndarray:
    """Random step of ``eps/2`` along the sign of Gaussian noise, then BIM iterations."""
    _check_eps(eps)
    step_size = eps / 4 if step_size is None else step_size
    X, y = _prepare(X, y)
    if _vanishes(eps, X):
        return X.copy()
    _check_iterative(steps, step_size)
    rng = np.random.default_rng(seed)
    x_adv = _sign_step(X, rng.standard_normal(X.shape), eps / 2)
    return _iterate(model, X, y, x_adv, eps, steps, step_size)


def gaussian_kernel(size: int, sigma: float) -> np.ndarray:
    """Normalised 2-D Gaussian kernel of odd ``size``."""
    if size < 1 or size % 2 == 0:
        raise ValueError(f"kernel size must be odd and positive, got {size}")
    r = np.arange(size, dtype=np.float64) - (size - 1) / 2
    g = np.exp(-(r**2) / (2 * sigma**2)) if sigma > 0 else (r == 0).astype(np.float64)
    k = np.outer(g, g)
    return k / k.sum()


def smooth(G: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Depthwise convolution of (N, H, W, C) with a 2-D kernel, zero 'same' padding."""
    kh, kw = kernel.shape
    ph, pw = kh // 2, kw // 2
    padded = np.pad(G, ((0, 0), (ph, ph), (pw, pw), (0, 0)))
    windows = sliding_window_view(padded, (kh, kw), axis=(1, 2))  # N, H, W, C, kh, kw
    # kernel is symmetric, so correlation and convolution coincide
    return np.einsum("nhwcij,ij->nhwc", windows, kernel.astype(G.dtype))


def tifgsm(
    model,
    X,
    y,
    eps: float,
    steps: int = 10,
    step_size: Optional[float] = None,
    kernel_size: int = 5,
    kernel_sigma: float = 1.5,
    momentum: float = 1.0,
) -> np.ndarray:
    """Translation-invariant iterative FGSM with momentum.

    Every raw gradient is smoothed with a Gaussian kernel, scaled by its mean
    absolute value and accumulated with ``momentum`` before the sign step.
    """
    _check_eps(eps)
    step_size = eps / 4 if step_size is None else step_size
    kernel = gaussian_kernel(kernel_size, kernel_sigma)
    X, y = _prepare(X, y)
    if _vanishes(eps, X):
        return X.copy()
    _check_iterative(steps, step_size)
    x_adv = X
    velocity = np.zeros_like(X)
    for _ in range(steps):
        g = model.loss_gradient(x_adv, y)
        if kernel_size > 1:
            g = smooth(g, kernel)
        scale = np.abs(g).mean(axis=(1, 2, 3), keepdims=True)
        g = g / np.where(scale > 0, scale, 1)
        velocity = momentum * velocity + g
        x_adv = _project(_sign_step(x_adv, velocity, step_size), X, eps)
    return x_adv


def fgsm_sweep(model, X, y, eps_values):
    """Yield ``(eps, fgsm(model, X, y, eps))`` for several eps from one gradient."""
    X, y = _prepare(X, y)
    g = None
    for eps in eps_values:
        _check_eps(eps)
        if _vanishes(eps, X):
            yield eps, X.copy()
            continue
        if g is None:
            g = model.loss_gradient(X, y)
        yield eps, _sign_step(X, g, eps)

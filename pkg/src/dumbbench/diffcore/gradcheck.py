"""Input gradients of classifiers and their finite-difference verification."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, List, Sequence

import numpy as np

from . import ops
from .tensor import Tensor, grad


def _as_batch(x: np.ndarray, y):
    x = np.asarray(x)
    y = np.atleast_1d(np.asarray(y, dtype=np.int64))
    single = x.ndim == 3
    if single:
        x = x[None]
    return x, y, single


def grad_wrt_input(model, x: np.ndarray, y) -> np.ndarray:
    """Gradient of the cross-entropy loss with respect to the input image(s).

    ``model`` is anything exposing ``forward(Tensor) -> Tensor`` of logits. For a
    batch the gradient of the summed loss is returned, so every row is the
    per-sample gradient regardless of batch size. The model is not modified.
    """
    xb, yb, single = _as_batch(x, y)
    xt = Tensor(xb, requires_grad=True)
    loss = ops.cross_entropy(model.forward(xt), yb, reduction="sum")
    (g,) = grad(loss, [xt])
    return g[0] if single else g


def _per_sample_losses(model, xb: np.ndarray, yb: np.ndarray) -> np.ndarray:
    z = model.forward(Tensor(xb)).data.astype(np.float64)
    z = z - z.max(axis=1, keepdims=True)
    return np.log(np.exp(z).sum(axis=1)) - z[np.arange(len(yb)), yb]


@dataclass
class GradCheckReport:
    max_deviation: float
    tolerance: float
    n_checked: int
    n_skipped: int

    @property
    def passed(self) -> bool:
        # kinks are skipped, but a check that skips most coordinates proves nothing
        return self.max_deviation <= self.tolerance and self.n_skipped <= 0.05 * max(self.n_checked + self.n_skipped, 1)

    def __bool__(self) -> bool:
        return self.passed


def _compare(analytic: np.ndarray, f_plus, f_minus, f_zero, step: float, tolerance: float) -> GradCheckReport:
    numeric = (f_plus - f_minus) / (2 * step)
    scale = max(np.abs(analytic).max(initial=0.0), np.abs(numeric).max(initial=0.0), 1e-12)
    # one-sided slopes disagreeing means a relu/maxpool kink lies inside the step
    kink = np.abs((f_plus - f_zero) - (f_zero - f_minus)) / step > tolerance * scale
    dev = np.abs(analytic.ravel() - numeric)[~kink]
    return GradCheckReport(
        max_deviation=float(dev.max(initial=0.0) / scale),
        tolerance=tolerance,
        n_checked=int((~kink).sum()),
        n_skipped=int(kink.sum()),
    )


def finite_difference_check(model, x: np.ndarray, y, step: float = 1e-4, tolerance: float = 1e-3) -> GradCheckReport:
    """Compare :func:`grad_wrt_input` with central differences in double precision.

    The deviation is the largest absolute disagreement divided by the largest
    gradient magnitude. Coordinates whose one-sided difference quotients
    disagree (a non-differentiable point within ``step``) are skipped and
    counted in the report.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    if hasattr(model, "astype"):
        model = model.astype(np.float64)
    xb, yb, _ = _as_batch(np.asarray(x, dtype=np.float64), y)
    reports = []
    for xi, yi in zip(xb, yb):
        analytic = np.asarray(grad_wrt_input(model, xi, yi), dtype=np.float64)
        d = xi.size
        eye = np.eye(d, dtype=np.float64).reshape((d,) + xi.shape) * step
        labels = np.full(d, yi)
        f_plus = _per_sample_losses(model, xi[None] + eye, labels)
        f_minus = _per_sample_losses(model, xi[None] - eye, labels)
        f_zero = _per_sample_losses(model, xi[None], yi[None])[0]
        reports.append(_compare(analytic, f_plus, f_minus, f_zero, step, tolerance))
    return GradCheckReport(
        max_deviation=max(r.max_deviation for r in reports),
        tolerance=tolerance,
        n_checked=sum(r.n_checked for r in reports),
        n_skipped=sum(r.n_skipped for r in reports),
    )


def check_op_gradients(
    fn: Callable[..., Tensor], arrays: Sequence[np.ndarray], step: float = 1e-4, tolerance: float = 1e-3
) -> List[GradCheckReport]:
    """Finite-difference check of a scalar function of several arrays, one report per argument."""
    arrays = [np.asarray(a, dtype=np.float64) for a in arrays]
    tensors = [Tensor(a, requires_grad=True) for a in arrays]
    analytic = grad(fn(*tensors), tensors)

    def value(k, arr):
        args = [Tensor(a) for a in arrays]
        args[k] = Tensor(arr)
        return float(fn(*args).data)

    reports = []
    for k, a in enumerate(arrays):
        flat = a.ravel()
        f_plus, f_minus = np.empty(flat.size), np.empty(flat.size)
        for i in range(flat.size):
            e = np.zeros_like(flat)
            e[i] = step
            f_plus[i] = value(k, (flat + e).reshape(a.shape))
            f_minus[i] = value(k, (flat - e).reshape(a.shape))
        reports.append(_compare(analytic[k], f_plus, f_minus, value(k, a), step, tolerance))
    return reports

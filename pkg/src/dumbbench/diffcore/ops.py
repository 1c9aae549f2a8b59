"""Differentiable operations over :class:`~dumbbench.diffcore.tensor.Tensor`.

Image batches use NHWC layout, convolution kernels are ``(kh, kw, c_in, c_out)``.
No broadcasting is performed beyond the bias addition of ``dense``/``conv2d``.
"""
from __future__ import annotations

from typing import Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import ShapeError
from .tensor import Tensor

ArrayOrTensor = Union[Tensor, np.ndarray, float]


def as_tensor(x: ArrayOrTensor) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _same_shape(a: Tensor, b: Tensor, op: str) -> None:
    if a.shape != b.shape:
        raise ShapeError(f"{op}: {a.shape} vs {b.shape}")


def add(a: ArrayOrTensor, b: ArrayOrTensor) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _same_shape(a, b, "add")
    return Tensor._from_op(a.data + b.data, (a, b), lambda g: (g, g), "add")


def sub(a: ArrayOrTensor, b: ArrayOrTensor) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _same_shape(a, b, "sub")
    return Tensor._from_op(a.data - b.data, (a, b), lambda g: (g, -g), "sub")


def mul(a: ArrayOrTensor, b: ArrayOrTensor) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _same_shape(a, b, "mul")
    return Tensor._from_op(a.data * b.data, (a, b), lambda g: (g * b.data, g * a.data), "mul")


def square(x: ArrayOrTensor) -> Tensor:
    x = as_tensor(x)
    return Tensor._from_op(x.data * x.data, (x,), lambda g: (2 * x.data * g,), "square")


def sum(x: ArrayOrTensor) -> Tensor:  # noqa: A001 - mirrors numpy naming
    x = as_tensor(x)
    return Tensor._from_op(
        np.asarray(x.data.sum(), dtype=x.dtype), (x,), lambda g: (np.full_like(x.data, g),), "sum"
    )


def relu(x: ArrayOrTensor) -> Tensor:
    x = as_tensor(x)
    mask = x.data > 0
    return Tensor._from_op(np.where(mask, x.data, 0).astype(x.dtype), (x,), lambda g: (g * mask,), "relu")


def flatten(x: ArrayOrTensor) -> Tensor:
    x = as_tensor(x)
    if x.data.ndim < 2:
        raise ShapeError(f"flatten needs a batch axis, got {x.shape}")
    shape = x.shape
    return Tensor._from_op(
        x.data.reshape(shape[0], -1), (x,), lambda g: (g.reshape(shape),), "flatten"
    )


def dense(x: ArrayOrTensor, weight: ArrayOrTensor, bias: ArrayOrTensor) -> Tensor:
    """``x @ weight + bias`` for ``x`` of shape (N, D), weight (D, K), bias (K,)."""
    x, w, b = as_tensor(x), as_tensor(weight), as_tensor(bias)
    if x.data.ndim != 2 or w.data.ndim != 2 or x.shape[1] != w.shape[0] or b.shape != (w.shape[1],):
        raise ShapeError(f"dense: x {x.shape}, weight {w.shape}, bias {b.shape}")
    out = x.data @ w.data + b.data

    def _back(g):
        dx = g @ w.data.T if x.requires_grad else None
        if not w.requires_grad:
            return dx, None, None
        return dx, x.data.T @ g, g.sum(axis=0)

    return Tensor._from_op(out, (x, w, b), _back, "dense")


def _conv_output_size(size: int, k: int, stride: int, padding: int) -> int:
    return (size + 2 * padding - k) // stride + 1


def conv2d(
    x: ArrayOrTensor, weight: ArrayOrTensor, bias: ArrayOrTensor, stride: int = 1, padding: int = 0
) -> Tensor:
    """2-D cross-correlation of an NHWC batch with zero padding."""
    x, w, b = as_tensor(x), as_tensor(weight), as_tensor(bias)
    if stride < 1 or padding < 0:
        raise ShapeError(f"conv2d: stride {stride}, padding {padding}")
    if x.data.ndim != 4 or w.data.ndim != 4 or x.shape[3] != w.shape[2] or b.shape != (w.shape[3],):
        raise ShapeError(f"conv2d: x {x.shape}, weight {w.shape}, bias {b.shape}")
    n, h, wd, c = x.shape
    kh, kw, _, k_out = w.shape
    ho = _conv_output_size(h, kh, stride, padding)
    wo = _conv_output_size(wd, kw, stride, padding)
    if ho < 1 or wo < 1:
        raise ShapeError(f"conv2d: kernel {w.shape[:2]} larger than padded input {x.shape[1:3]}")
    xp = x.data
    if padding:
        xp = np.pad(xp, ((0, 0), (padding, padding), (padding, padding), (0, 0)))
    windows = sliding_window_view(xp, (kh, kw), axis=(1, 2))[:, ::stride, ::stride][:, :ho, :wo]
    cols = windows.transpose(0, 1, 2, 4, 5, 3).reshape(n * ho * wo, kh * kw * c)
    wmat = w.data.reshape(kh * kw * c, k_out)
    out = (cols @ wmat + b.data).reshape(n, ho, wo, k_out)

    def _back(g):
        g2 = g.reshape(n * ho * wo, k_out)
        dw = db = dx = None
        if w.requires_grad:
            dw = (cols.T @ g2).reshape(w.shape)
            db = g2.sum(axis=0)
        if x.requires_grad:
            dcols = (g2 @ wmat.T).reshape(n, ho, wo, kh, kw, c)
            dxp = np.zeros(xp.shape, dtype=g.dtype)
            for i in range(kh):
                for j in range(kw):
                    dxp[:, i : i + stride * (ho - 1) + 1 : stride, j : j + stride * (wo - 1) + 1 : stride, :] += dcols[
                        :, :, :, i, j, :
                    ]
            dx = dxp[:, padding : padding + h, padding : padding + wd, :] if padding else dxp
        return dx, dw, db

    return Tensor._from_op(out, (x, w, b), _back, "conv2d")


def maxpool2d(x: ArrayOrTensor, size: int) -> Tensor:
    """Non-overlapping max pooling; ties route the gradient to the first maximum."""
    x = as_tensor(x)
    if x.data.ndim != 4 or size < 1 or x.shape[1] % size or x.shape[2] % size:
        raise ShapeError(f"maxpool2d: input {x.shape} not divisible by pool size {size}")
    n, h, w, c = x.shape
    ho, wo = h // size, w // size
    blocks = x.data.reshape(n, ho, size, wo, size, c).transpose(0, 1, 3, 5, 2, 4).reshape(n, ho, wo, c, size * size)
    idx = blocks.argmax(axis=-1)[..., None]
    out = np.take_along_axis(blocks, idx, axis=-1)[..., 0]

    def _back(g):
        mask = np.zeros(blocks.shape, dtype=g.dtype)
        np.put_along_axis(mask, idx, g[..., None], axis=-1)
        dx = mask.reshape(n, ho, wo, c, size, size).transpose(0, 1, 4, 2, 5, 3).reshape(n, h, w, c)
        return (dx,)

    return Tensor._from_op(out, (x,), _back, "maxpool2d")


def _softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def softmax(x: ArrayOrTensor) -> Tensor:
    """Row-wise softmax over the last axis."""
    x = as_tensor(x)
    p = _softmax(x.data)

    def _back(g):
        return (p * (g - (g * p).sum(axis=-1, keepdims=True)),)

    return Tensor._from_op(p, (x,), _back, "softmax")


def cross_entropy(logits: ArrayOrTensor, labels, reduction: str = "mean") -> Tensor:
    """Softmax cross-entropy fused over raw logits of shape (N, K).

    ``reduction`` is ``"mean"`` (default) or ``"sum"``; both return a scalar.
    """
    logits = as_tensor(logits)
    labels = np.asarray(labels, dtype=np.int64)
    if logits.data.ndim != 2 or labels.shape != (logits.shape[0],):
        raise ShapeError(f"cross_entropy: logits {logits.shape}, labels {labels.shape}")
    if labels.size and (labels.min() < 0 or labels.max() >= logits.shape[1]):
        raise ShapeError(f"cross_entropy: labels outside [0, {logits.shape[1]})")
    n = logits.shape[0]
    z = logits.data
    shifted = z - z.max(axis=1, keepdims=True)
    logsum = np.log(np.exp(shifted).sum(axis=1))
    rows = np.arange(n)
    losses = logsum - shifted[rows, labels]
    scale = 1.0 / n if reduction == "mean" else 1.0
    if reduction not in ("mean", "sum"):
        raise ValueError(f"unknown reduction {reduction!r}")
    value = np.asarray(losses.sum() * scale, dtype=z.dtype)

    def _back(g):
        d = _softmax(z)
        d[rows, labels] -= 1
        return (d * (g * scale),)

    return Tensor._from_op(value, (logits,), _back, "cross_entropy")

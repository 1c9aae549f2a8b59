"""Layer specifications and the forward pass of the three desk-scale architectures."""
from __future__ import annotations

from typing import Dict, Mapping, Sequence, Tuple

import numpy as np

from ..diffcore import Tensor, ops
from ..errors import ShapeError

# (kind, *args): conv -> (out_channels, kernel, stride, padding); pool -> (size,); dense -> (units,)
LayerSpec = Tuple

ARCHITECTURES: Dict[str, Tuple[LayerSpec, ...]] = {
    "arch-S": (
        ("conv", 8, 3, 1, 1),
        ("relu",),
        ("pool", 4),
        ("flatten",),
        ("dense", 2),
    ),
    "arch-M": (
        ("conv", 16, 3, 2, 1),
        ("relu",),
        ("conv", 32, 3, 1, 1),
        ("relu",),
        ("pool", 2),
        ("flatten",),
        ("dense", 2),
    ),
    "arch-L": (
        ("conv", 32, 3, 2, 1),
        ("relu",),
        ("conv", 64, 3, 2, 1),
        ("relu",),
        ("conv", 64, 3, 1, 1),
        ("relu",),
        ("pool", 2),
        ("flatten",),
        ("dense", 64),
        ("relu",),
        ("dense", 2),
    ),
}


def _param_shapes(layers: Sequence[LayerSpec], input_shape: Tuple[int, int, int]) -> Dict[str, Tuple[int, ...]]:
    h, w, c = input_shape
    flat = None
    shapes: Dict[str, Tuple[int, ...]] = {}
    for i, layer in enumerate(layers):
        kind = layer[0]
        if kind == "conv":
            out, k, stride, pad = layer[1:]
            shapes[f"{i}.weight"] = (k, k, c, out)
            shapes[f"{i}.bias"] = (out,)
            h = (h + 2 * pad - k) // stride + 1
            w = (w + 2 * pad - k) // stride + 1
            c = out
            if h < 1 or w < 1:
                raise ShapeError(f"input {input_shape} too small for layer {i} {layer}")
        elif kind == "pool":
            size = layer[1]
            if h % size or w % size:
                raise ShapeError(f"input {input_shape} gives {h}x{w} maps, not divisible by pool {size}")
            h, w = h // size, w // size
        elif kind == "flatten":
            flat = h * w * c
        elif kind == "dense":
            if flat is None:
                raise ShapeError("dense layer before flatten")
            shapes[f"{i}.weight"] = (flat, layer[1])
            shapes[f"{i}.bias"] = (layer[1],)
            flat = layer[1]
        elif kind != "relu":
            raise ValueError(f"unknown layer kind {kind!r}")
    return shapes


def parameter_count(arch: str, input_shape: Tuple[int, int, int] = (32, 32, 3)) -> int:
    return int(sum(np.prod(s) for s in _param_shapes(ARCHITECTURES[arch], input_shape).values()))


class Network:
    """Parameters plus layer list; ``forward`` records a differentiable trace."""

    def __init__(self, arch: str, params: Mapping[str, np.ndarray], input_shape: Tuple[int, int, int]):
        if arch not in ARCHITECTURES:
            raise ValueError(f"unknown architecture {arch!r}")
        self.arch = arch
        self.layers = ARCHITECTURES[arch]
        self.input_shape = tuple(int(v) for v in input_shape)
        expected = _param_shapes(self.layers, self.input_shape)
        if set(expected) != set(params) or any(tuple(params[k].shape) != s for k, s in expected.items()):
            raise ShapeError(f"parameters do not match {arch} at input {self.input_shape}")
        self.params = {k: np.array(params[k], copy=True) for k in expected}
        for v in self.params.values():
            v.flags.writeable = False

    @classmethod
    def initialize(cls, arch: str, input_shape, rng: np.random.Generator, dtype=np.float32) -> "Network":
        params = {}
        for name, shape in _param_shapes(ARCHITECTURES[arch], tuple(input_shape)).items():
            if name.endswith("bias"):
                params[name] = np.zeros(shape, dtype=dtype)
            else:
                fan_in = int(np.prod(shape[:-1]))
                params[name] = (rng.standard_normal(shape) * np.sqrt(2.0 / fan_in)).astype(dtype)
        return cls(arch, params, input_shape)

    @property
    def dtype(self):
        return next(iter(self.params.values())).dtype

    @property
    def parameter_count(self) -> int:
        return int(sum(v.size for v in self.params.values()))

    def astype(self, dtype) -> "Network":
        return Network(self.arch, {k: v.astype(dtype) for k, v in self.params.items()}, self.input_shape)

    def forward(self, x: Tensor, params: Mapping[str, Tensor] = None) -> Tensor:
        if tuple(x.shape[1:]) != self.input_shape:
            raise ShapeError(f"{self.arch} expects images {self.input_shape}, got {tuple(x.shape[1:])}")
        p = params if params is not None else {k: Tensor(v) for k, v in self.params.items()}
        out = x
        for i, layer in enumerate(self.layers):
            kind = layer[0]
            if kind == "conv":
                out = ops.conv2d(out, p[f"{i}.weight"], p[f"{i}.bias"], stride=layer[3], padding=layer[4])
            elif kind == "relu":
                out = ops.relu(out)
            elif kind == "pool":
                out = ops.maxpool2d(out, layer[1])
            elif kind == "flatten":
                out = ops.flatten(out)
            elif kind == "dense":
                out = ops.dense(out, p[f"{i}.weight"], p[f"{i}.bias"])
        return out

    def logits(self, X: np.ndarray, batch_size: int = 512) -> np.ndarray:
        X = np.asarray(X)
        if X.ndim != 4:
            raise ShapeError(f"expected an image batch, got {X.shape}")
        chunks = [self.forward(Tensor(X[i : i + batch_size])).data for i in range(0, len(X), batch_size)]
        if not chunks:
            return np.zeros((0, 2), dtype=self.dtype)
        return np.concatenate(chunks)

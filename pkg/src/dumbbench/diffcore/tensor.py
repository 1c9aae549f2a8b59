"""Tensors and reverse-mode differentiation.

A :class:`Tensor` wraps a numpy array.  Operations in :mod:`.ops` build new
tensors that remember their parents and a closure mapping the output gradient
to the parents' gradients.  :func:`backward` walks that trace in reverse
topological order.
"""
from __future__ import annotations

from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import NonScalarLossError

BackwardFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]


class Tensor:
    """An n-dimensional float array that can take part in differentiation.

    Args:
        data: array-like values. Floating arrays keep their precision; anything
            else is converted to float32.
        requires_grad: whether :func:`backward` should report a gradient for
            this tensor.
    """

    __slots__ = ("data", "requires_grad", "grad", "_parents", "_backward", "op")

    def __init__(self, data, requires_grad: bool = False):
        arr = np.asarray(data)
        if arr.dtype not in (np.float32, np.float64):
            arr = arr.astype(np.float32)
        self.data = arr
        self.requires_grad = bool(requires_grad)
        self.grad: Optional[np.ndarray] = None
        self._parents: Tuple["Tensor", ...] = ()
        self._backward: Optional[BackwardFn] = None
        self.op = "leaf"

    @classmethod
    def _from_op(cls, data: np.ndarray, parents: Sequence["Tensor"], backward: BackwardFn, op: str) -> "Tensor":
        out = cls(data)
        out.requires_grad = any(p.requires_grad for p in parents)
        if out.requires_grad:
            out._parents = tuple(parents)
            out._backward = backward
        out.op = op
        return out

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def is_leaf(self) -> bool:
        return not self._parents

    def numpy(self) -> np.ndarray:
        return self.data

    def backward(self) -> Dict["Tensor", np.ndarray]:
        return backward(self)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, dtype={self.dtype}, op={self.op}, requires_grad={self.requires_grad})"


def trace(loss: Tensor) -> List[Tensor]:
    """Return the nodes reachable from ``loss`` with every node after its inputs."""
    order: List[Tensor] = []
    seen = set()
    stack = [(loss, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in reversed(node._parents):
            if id(parent) not in seen:
                stack.append((parent, False))
    return order


def backward(loss: Tensor) -> Dict[Tensor, np.ndarray]:
    """Differentiate a scalar ``loss`` with respect to every leaf that requires grad.

    Gradients are also stored on the leaves' ``grad`` attribute (overwriting any
    previous value, never accumulating across calls).

    Raises:
        NonScalarLossError: if ``loss`` holds more than one value.
    """
    if loss.data.size != 1:
        raise NonScalarLossError(f"loss has shape {loss.shape}")
    order = trace(loss)
    grads: Dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    leaves: Dict[Tensor, np.ndarray] = {}
    for node in reversed(order):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        if node.is_leaf:
            if node.requires_grad:
                leaves[node] = g
            continue
        for parent, pg in zip(node._parents, node._backward(g)):
            if pg is None or not parent.requires_grad:
                continue
            key = id(parent)
            if key in grads:
                grads[key] = grads[key] + pg
            else:
                grads[key] = pg
    for leaf, g in leaves.items():
        leaf.grad = g
    # leaves that require grad but do not influence the loss get zeros
    for node in order:
        if node.is_leaf and node.requires_grad and node not in leaves:
            node.grad = np.zeros_like(node.data)
            leaves[node] = node.grad
    return leaves


def grad(loss: Tensor, inputs: Sequence[Tensor]) -> List[np.ndarray]:
    """Gradients of ``loss`` for each of ``inputs``; zeros where there is no dependence."""
    found = backward(loss)
    return [found[t] if t in found else np.zeros_like(t.data) for t in inputs]

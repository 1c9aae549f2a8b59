"""Shared fixtures: a closed-form linear classifier and small random networks."""
from __future__ import annotations

import numpy as np

from dumbbench.models import CNNClassifier, Network


class LinearModel:
    """Binary classifier with logits ``(0, w.x + b)``; every derivative is closed form.

    It implements the same protocol as :class:`CNNClassifier` (``predict``,
    ``predict_proba``, ``loss_gradient``, ``logit_difference``) without going
    through the autodiff engine, so it serves as an oracle for the attacks.
    """

    def __init__(self, w: np.ndarray, b: float = 0.0):
        self.w = np.asarray(w, dtype=np.float64)
        self.b = float(b)
        self.queries = 0

    def score(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        return np.tensordot(X, self.w, axes=self.w.ndim) + self.b

    def predict_proba(self, X) -> np.ndarray:
        self.queries += len(X)
        p1 = 1 / (1 + np.exp(-self.score(X)))
        return np.stack([1 - p1, p1], axis=1)

    def predict(self, X) -> np.ndarray:
        return (self.score(X) > 0).astype(np.int64)

    def loss_gradient(self, X, y) -> np.ndarray:
        p1 = 1 / (1 + np.exp(-self.score(X)))
        coef = p1 - np.asarray(y, dtype=np.float64)
        return (coef[:, None, None, None] * self.w[None]).astype(np.asarray(X).dtype)

    def logit_difference(self, X):
        X = np.asarray(X)
        return self.score(X), np.broadcast_to(self.w, X.shape).astype(X.dtype)

    def distance(self, X) -> np.ndarray:
        """Euclidean distance to the hyperplane ``w.x + b = 0``."""
        return np.abs(self.score(X)) / np.linalg.norm(self.w)


class ConstantModel:
    """Ignores its input; its label can never be flipped."""

    def __init__(self, d: float = 1.0):
        self.d = d

    def predict(self, X):
        return np.full(len(X), int(self.d > 0))

    def logit_difference(self, X):
        X = np.asarray(X)
        return np.full(len(X), self.d), np.zeros_like(X)


def random_network(arch: str = "arch-S", size: int = 8, seed: int = 0, dtype=np.float32) -> CNNClassifier:
    rng = np.random.default_rng(seed)
    net = Network.initialize(arch, (size, size, 3), rng, dtype=dtype)
    return CNNClassifier.from_network(net)


def random_images(n: int, size: int = 8, seed: int = 0, lo: float = 0.0, hi: float = 1.0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.uniform(lo, hi, (n, size, size, 3)).astype(np.float32)


def random_labels(n: int, seed: int = 0) -> np.ndarray:
    return np.random.default_rng(seed).integers(0, 2, n)

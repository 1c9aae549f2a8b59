"""scikit-learn compatible CNN classifier backed by :mod:`dumbbench.diffcore`."""
from __future__ import annotations

from typing import List

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from ..diffcore import Tensor, checkpoint, grad, ops
from ..diffcore.gradcheck import grad_wrt_input
from ..errors import ShapeError, TrainingDivergedError
from ..validation import check_images, check_images_labels
from .metrics import f1_score
from .network import ARCHITECTURES, Network


class CNNClassifier(ClassifierMixin, BaseEstimator):
    """Binary image classifier trained with momentum SGD.

    After every epoch the model is scored on the validation set (when given) and
    the parameters with the best validation F1 are kept; ties keep the earlier
    epoch. Without a validation set the final epoch is kept.

    Parameters
    ----------
    arch : {"arch-S", "arch-M", "arch-L"}
    epochs, batch_size, learning_rate, momentum : training schedule.
    positive_class : class treated as positive for checkpoint-selection F1.
    random_state : seed for initialisation and mini-batch order.
    """

    def __init__(
        self,
        arch: str = "arch-S",
        epochs: int = 20,
        batch_size: int = 32,
        learning_rate: float = 0.01,
        momentum: float = 0.9,
        positive_class: int = 1,
        random_state: int = 0,
    ):
        self.arch = arch
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.momentum = momentum
        self.positive_class = positive_class
        self.random_state = random_state

    def fit(self, X, y, X_val=None, y_val=None):
        if self.arch not in ARCHITECTURES:
            raise ValueError(f"unknown architecture {self.arch!r}")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")
        X, y = check_images_labels(X, y)
        has_val = X_val is not None
        if has_val:
            X_val, y_val = check_images_labels(X_val, y_val)
        rng = np.random.default_rng(self.random_state)
        net = Network.initialize(self.arch, X.shape[1:], rng)
        params = {k: v.copy() for k, v in net.params.items()}
        velocity = {k: np.zeros_like(v) for k, v in params.items()}
        self.classes_ = np.array([0, 1])
        self.history_: List[dict] = []
        best_f1, best_params, best_epoch = -1.0, None, -1
        for epoch in range(self.epochs):
            order = rng.permutation(len(X))
            losses = []
            for start in range(0, len(X), self.batch_size):
                idx = order[start : start + self.batch_size]
                tparams = {k: Tensor(v, requires_grad=True) for k, v in params.items()}
                loss = ops.cross_entropy(net.forward(Tensor(X[idx]), tparams), y[idx])
                if not np.isfinite(loss.data):
                    raise TrainingDivergedError(f"loss {float(loss.data)} at epoch {epoch}")
                names = list(tparams)
                for name, g in zip(names, grad(loss, [tparams[n] for n in names])):
                    velocity[name] = self.momentum * velocity[name] - self.learning_rate * g
                    params[name] += velocity[name]
                losses.append(float(loss.data))
            net = Network(self.arch, params, X.shape[1:])
            record = {"epoch": epoch, "train_loss": float(np.mean(losses))}
            if has_val:
                val_pred = np.argmax(net.logits(X_val), axis=1)
                record["val_f1"] = f1_score(val_pred, y_val, self.positive_class).f1
                if record["val_f1"] > best_f1:
                    best_f1, best_params, best_epoch = record["val_f1"], net.params, epoch
            self.history_.append(record)
        if best_params is None:
            best_params, best_epoch = net.params, self.epochs - 1
        self.network_ = Network(self.arch, best_params, X.shape[1:])
        self.best_epoch_ = best_epoch
        self.n_features_in_ = int(np.prod(X.shape[1:]))
        return self

    @classmethod
    def from_network(cls, network: Network, **params) -> "CNNClassifier":
        """Wrap an existing (e.g. checkpoint-loaded) network as a fitted estimator."""
        clf = cls(arch=network.arch, **params)
        clf.network_ = network
        clf.classes_ = np.array([0, 1])
        clf.history_ = []
        clf.best_epoch_ = -1
        clf.n_features_in_ = int(np.prod(network.input_shape))
        return clf

    # model protocol used by diffcore and the attacks
    def forward(self, x: Tensor) -> Tensor:
        check_is_fitted(self, "network_")
        return self.network_.forward(x)

    def astype(self, dtype) -> Network:
        check_is_fitted(self, "network_")
        return self.network_.astype(dtype)

    def _check_input(self, X) -> np.ndarray:
        check_is_fitted(self, "network_")
        X = check_images(X, allow_single=True, dtype=None, check_range=False)
        if tuple(X.shape[1:]) != self.network_.input_shape:
            raise ShapeError(f"model expects {self.network_.input_shape}, got {tuple(X.shape[1:])}")
        return X

    def decision_function(self, X) -> np.ndarray:
        """Raw logits, shape (N, 2)."""
        return self.network_.logits(self._check_input(X))

    def predict_proba(self, X) -> np.ndarray:
        z = self.decision_function(X).astype(np.float64)
        z -= z.max(axis=1, keepdims=True)
        e = np.exp(z)
        return e / e.sum(axis=1, keepdims=True)

    def predict(self, X) -> np.ndarray:
        # argmax returns the first maximum: ties go to the lower class index
        return np.argmax(self.decision_function(X), axis=1)

    def loss_gradient(self, X, y) -> np.ndarray:
        """Per-sample gradient of the cross-entropy loss with respect to the input."""
        X = self._check_input(X)
        return grad_wrt_input(self.network_, X, y)

    def logit_difference(self, X) -> tuple:
        """Return ``(f1 - f0, grad_x (f1 - f0))`` per sample."""
        X = self._check_input(X)
        xt = Tensor(X, requires_grad=True)
        z = self.network_.forward(xt)
        sign = np.zeros(z.shape, dtype=z.dtype)
        sign[:, 0], sign[:, 1] = -1, 1
        total = ops.sum(ops.mul(z, sign))
        (g,) = grad(total, [xt])
        return z.data[:, 1] - z.data[:, 0], g

    @property
    def parameter_count(self) -> int:
        check_is_fitted(self, "network_")
        return self.network_.parameter_count

    def save(self, path) -> None:
        checkpoint.save(path, self.network_.params)

    @classmethod
    def load(cls, path, arch: str, input_shape, **params) -> "CNNClassifier":
        return cls.from_network(Network(arch, checkpoint.load(path), input_shape), **params)

    def parameter_hash(self) -> str:
        check_is_fitted(self, "network_")
        return checkpoint.parameter_hash(self.network_.params)

    def _more_tags(self):
        return {"binary_only": True}


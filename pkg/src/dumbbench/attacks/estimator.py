"""scikit-learn style wrapper around the attack registry."""
from __future__ import annotations

from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ..validation import check_images, check_labels
from .adversarial_set import AdversarialSet
from .registry import AttackSpec, get_attack


class AttackTransformer(TransformerMixin, BaseEstimator):
    """Turn clean images into adversarial ones.

    Parameters
    ----------
    attack : str
        Registry name, e.g. ``"PGD"`` or ``"BoxBlur"``.
    param : float or int, optional
        Value of the attack's tunable parameter (eps, overshoot, radius...).
    model : fitted classifier, optional
        Surrogate for mathematical attacks; ignored by image transforms.
    hyperparams : dict, optional
        Overrides for the attack's fixed hyperparameters.
    random_state : int
        Seed for stochastic attacks.

    Examples
    --------
    >>> t = AttackTransformer("FGSM", param=0.03, model=clf).fit()
    >>> X_adv = t.transform(X, y)
    """

    def __init__(self, attack: str = "FGSM", param=None, model=None, hyperparams: Optional[dict] = None, random_state: int = 0):
        self.attack = attack
        self.param = param
        self.model = model
        self.hyperparams = hyperparams
        self.random_state = random_state

    def fit(self, X=None, y=None):
        spec = get_attack(self.attack)
        if self.hyperparams:
            spec = spec.with_fixed(**self.hyperparams)
        if spec.param_name is not None and self.param is None:
            raise ValueError(f"{spec.name} needs param ({spec.param_name})")
        if spec.is_mathematical and self.model is None:
            raise ValueError(f"{spec.name} is model-based; pass model=")
        self.spec_: AttackSpec = spec
        return self

    def _labels(self, X, y) -> np.ndarray:
        if y is not None:
            return check_labels(y, len(X))
        if self.spec_.is_mathematical:
            return np.asarray(self.model.predict(X))
        return np.zeros(len(X), dtype=np.int64)

    def transform(self, X, y=None) -> np.ndarray:
        """Perturb ``X``; without ``y`` the model's own predictions serve as labels."""
        check_is_fitted(self, "spec_")
        X = check_images(X, allow_single=False)
        return self.spec_.apply(self.model, X, self._labels(X, y), self.param, self.random_state)

    def fit_transform(self, X, y=None, **fit_params):
        return self.fit(X, y).transform(X, y)

    def generate(self, X, y, provenance: Optional[dict] = None) -> AdversarialSet:
        check_is_fitted(self, "spec_")
        X = check_images(X)
        y = check_labels(y, len(X))
        out = self.spec_.generate(self.model, X, y, self.param, self.random_state)
        prov = {
            "attack": self.spec_.name,
            "family": self.spec_.family,
            "param_name": self.spec_.param_name,
            "param": self.param,
            "hyperparams": self.spec_.fixed_params,
            "seed": self.random_state,
        }
        prov.update(provenance or {})
        return AdversarialSet(X, out.x_adv, y, prov)


"""Binary classification metrics."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..errors import EmptyEvalError, ShapeError


@dataclass(frozen=True)
class Metrics:
    precision: float
    recall: float
    f1: float
    accuracy: float
    tp: int
    fp: int
    tn: int
    fn: int

    def to_dict(self) -> dict:
        return asdict(self)


def f1_score(predictions, ground_truth, positive_class: int = 1) -> Metrics:
    """Precision, recall, accuracy and F1 (harmonic mean of precision and recall).

    Undefined precision or recall is reported as 0, and F1 is 0 whenever
    precision + recall is 0.
    """
    pred = np.asarray(predictions).ravel()
    truth = np.asarray(ground_truth).ravel()
    if pred.shape != truth.shape:
        raise ShapeError(f"{pred.shape[0]} predictions vs {truth.shape[0]} labels")
    if pred.size == 0:
        raise EmptyEvalError("no predictions to score")
    p_pos = pred == positive_class
    t_pos = truth == positive_class
    tp = int(np.sum(p_pos & t_pos))
    fp = int(np.sum(p_pos & ~t_pos))
    fn = int(np.sum(~p_pos & t_pos))
    tn = int(np.sum(~p_pos & ~t_pos))
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return Metrics(precision, recall, f1, (tp + tn) / pred.size, tp, fp, tn, fn)

"""The architecture dimension: three CNNs of increasing size, training and baseline metrics."""
from .classifier import CNNClassifier
from .metrics import Metrics, f1_score
from .network import ARCHITECTURES, Network, parameter_count
from .registry import load_registry, save_records
from .training import ModelRecord, Provenance, TrainingConfig, derive_seed, evaluate_baseline, predict, train

__all__ = [
    "ARCHITECTURES",
    "CNNClassifier",
    "Metrics",
    "ModelRecord",
    "Network",
    "Provenance",
    "TrainingConfig",
    "derive_seed",
    "evaluate_baseline",
    "f1_score",
    "load_registry",
    "parameter_count",
    "predict",
    "save_records",
    "train",
]

"""Model registry: one checkpoint per model plus a JSON index."""
from __future__ import annotations

import json
from pathlib import Path
from typing import Dict, Iterable, Union

from ..diffcore import checkpoint
from ..errors import CheckpointError, MissingPrerequisiteError, RegistryError
from .classifier import CNNClassifier
from .metrics import Metrics
from .network import Network
from .training import ModelRecord, Provenance

INDEX = "index.json"


def _read_index(directory: Path) -> dict:
    path = directory / INDEX
    if not path.exists():
        return {}
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise RegistryError(f"corrupt registry index {path}: {exc}") from exc


def save_records(records: Iterable[ModelRecord], directory: Union[str, Path]) -> Path:
    """Write checkpoints and merge their entries into the index (keyed by model id)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    index = _read_index(directory)
    for rec in records:
        name = f"{rec.model_id}.dmb"
        checkpoint.save(directory / name, rec.model.network_.params)
        index[rec.model_id] = {
            "provenance": rec.provenance.to_dict(),
            "checkpoint": name,
            "input_shape": list(rec.model.network_.input_shape),
            "parameter_count": rec.model.parameter_count,
            "parameter_hash": rec.parameter_hash,
            "best_epoch": int(rec.model.best_epoch_),
            "history": rec.history,
            "baseline": rec.baseline.to_dict() if rec.baseline else None,
        }
    path = directory / INDEX
    path.write_text(json.dumps(dict(sorted(index.items())), indent=2, sort_keys=True))
    return path


def load_registry(directory: Union[str, Path]) -> Dict[str, ModelRecord]:
    directory = Path(directory)
    if not (directory / INDEX).exists():
        raise MissingPrerequisiteError(f"no model registry at {directory}")
    out: Dict[str, ModelRecord] = {}
    for model_id, entry in _read_index(directory).items():
        prov = Provenance(**entry["provenance"])
        try:
            params = checkpoint.load(directory / entry["checkpoint"])
        except (OSError, CheckpointError) as exc:
            raise RegistryError(f"cannot load checkpoint for {model_id}: {exc}") from exc
        if checkpoint.parameter_hash(params) != entry["parameter_hash"]:
            raise RegistryError(f"checkpoint hash mismatch for {model_id}")
        clf = CNNClassifier.from_network(Network(prov.arch, params, tuple(entry["input_shape"])))
        clf.best_epoch_ = entry.get("best_epoch", -1)
        clf.history_ = entry.get("history", [])
        baseline = Metrics(**entry["baseline"]) if entry.get("baseline") else None
        out[model_id] = ModelRecord(prov, clf, baseline, entry["parameter_hash"], clf.history_)
    return out

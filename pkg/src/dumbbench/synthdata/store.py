"""On-disk dataset layout: content-addressed PNG cache plus a JSON manifest."""
from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Union

import numpy as np
from PIL import Image

from ..errors import MissingPrerequisiteError
from .generate import ImageSet, from_uint8
from .splits import DatasetSplit, content_hash

MANIFEST = "manifest.json"


def _png_path(images_dir: Path, digest: str) -> Path:
    return images_dir / digest[:2] / f"{digest}.png"


def save_split(split: DatasetSplit, directory: Union[str, Path], images_dir: Union[str, Path, None] = None) -> Path:
    directory = Path(directory)
    images_dir = Path(images_dir) if images_dir is not None else directory / "images"
    directory.mkdir(parents=True, exist_ok=True)
    members = {}
    counts = {}
    for part, data in split.parts().items():
        rows = []
        for img, label in zip(data.X, data.y):
            digest = content_hash(img)
            target = _png_path(images_dir, digest)
            if not target.exists():
                target.parent.mkdir(parents=True, exist_ok=True)
                Image.fromarray(np.round(img * 255).astype(np.uint8)).save(target)
            rows.append([digest, int(label)])
        members[part] = rows
        counts[part] = {str(c): int(np.sum(data.y == c)) for c in (0, 1)}
    manifest = {
        **{k: v for k, v in split.provenance.items()},
        "image_shape": list(split.train.X.shape[1:]),
        "images_dir": os.path.relpath(images_dir.resolve(), directory.resolve()),
        "counts": counts,
        "splits": members,
    }
    path = directory / MANIFEST
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return path


def load_split(directory: Union[str, Path]) -> DatasetSplit:
    directory = Path(directory)
    path = directory / MANIFEST
    if not path.exists():
        raise MissingPrerequisiteError(f"no dataset manifest at {path}")
    manifest = json.loads(path.read_text())
    images_dir = (directory / manifest["images_dir"]).resolve()
    prov = {k: v for k, v in manifest.items() if k not in ("splits", "counts", "images_dir", "image_shape")}
    parts = {}
    for part, rows in manifest["splits"].items():
        X = np.zeros((len(rows), *manifest["image_shape"]), dtype=np.float32)
        for i, (digest, _) in enumerate(rows):
            with Image.open(_png_path(images_dir, digest)) as im:
                X[i] = from_uint8(np.asarray(im.convert("RGB")))
        y = np.asarray([lab for _, lab in rows], dtype=np.int64)
        parts[part] = ImageSet(X, y, {**prov, "part": part})
    return DatasetSplit(parts["train"], parts["validation"], parts["test"], provenance=prov)

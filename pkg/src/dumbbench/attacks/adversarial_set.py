"""Pairs of original and perturbed images with generator provenance."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np
from PIL import Image

from ..errors import MissingPrerequisiteError, ShapeError
from ..perceptual import ssim_batch
from ..validation import check_images, check_labels

MANIFEST = "manifest.json"


def _to_png(img: np.ndarray, path: Path) -> None:
    Image.fromarray(np.round(np.clip(img, 0, 1) * 255).astype(np.uint8)).save(path, optimize=False)


def _from_png(path: Path) -> np.ndarray:
    return np.asarray(Image.open(path).convert("RGB"), dtype=np.float32) / np.float32(255)


@dataclass
class AdversarialSet:
    """``originals[i]`` perturbed into ``perturbed[i]``, true label ``labels[i]``.

    ``provenance`` records attack name, tuned parameter, fixed hyperparameters,
    the source model (or source dataset for model-free transforms) and seed.
    """

    originals: np.ndarray
    perturbed: np.ndarray
    labels: np.ndarray
    provenance: dict = field(default_factory=dict)
    _ssim: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        self.originals = check_images(self.originals, dtype=None)
        self.perturbed = check_images(self.perturbed, dtype=None)
        if self.originals.shape != self.perturbed.shape:
            raise ShapeError(f"originals {self.originals.shape} vs perturbed {self.perturbed.shape}")
        self.labels = check_labels(self.labels, len(self.originals))

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def ssim(self) -> np.ndarray:
        if self._ssim is None:
            self._ssim = ssim_batch(self.originals, self.perturbed)
        return self._ssim

    def mean_ssim(self) -> float:
        return float(np.mean(self.ssim))

    def max_deviation(self) -> float:
        if len(self) == 0:
            return 0.0
        return float(np.abs(self.perturbed.astype(np.float64) - self.originals).max())

    def save(self, directory: Union[str, Path]) -> Path:
        """Write ``orig_XXXX.png`` / ``adv_XXXX.png`` pairs and a JSON manifest.

        PNG holds 8 bits per channel, so reloaded perturbed images are the
        float images rounded to the nearest 1/255. Per-sample SSIM in the
        manifest refers to the unrounded images.
        """
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        names = []
        for i in range(len(self)):
            o, a = f"orig_{i:04d}.png", f"adv_{i:04d}.png"
            _to_png(self.originals[i], directory / o)
            _to_png(self.perturbed[i], directory / a)
            names.append([o, a])
        manifest = {
            "provenance": self.provenance,
            "count": len(self),
            "image_shape": list(self.originals.shape[1:]),
            "labels": self.labels.tolist(),
            "pairs": names,
            "ssim": [float(s) for s in self.ssim] if len(self) else [],
            "png_bits": 8,
        }
        path = directory / MANIFEST
        path.write_text(json.dumps(manifest, indent=2, sort_keys=True, default=_json_default))
        return path

    @classmethod
    def load(cls, directory: Union[str, Path]) -> "AdversarialSet":
        directory = Path(directory)
        path = directory / MANIFEST
        if not path.exists():
            raise MissingPrerequisiteError(f"no adversarial set at {directory}")
        m = json.loads(path.read_text())
        shape = (0, *m["image_shape"])
        orig = np.stack([_from_png(directory / o) for o, _ in m["pairs"]]) if m["pairs"] else np.zeros(shape, np.float32)
        adv = np.stack([_from_png(directory / a) for _, a in m["pairs"]]) if m["pairs"] else np.zeros(shape, np.float32)
        return cls(orig, adv, np.asarray(m["labels"], dtype=np.int64), m["provenance"])


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")

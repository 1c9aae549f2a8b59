"""Procedural binary image tasks rendered in two visual styles ("sources").

Each image has its own generator seeded from ``(seed, task, source, label,
index)``, so output does not depend on generation order or parallelism.
Pixel values are quantised to multiples of 1/255, which makes PNG caching
lossless.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Tuple

import numpy as np

TASK_IDS = ("easy", "medium", "hard")
SOURCE_IDS = ("A", "B")


@dataclass(frozen=True)
class TaskSpec:
    task_id: str
    class_names: Tuple[str, str]
    image_size: int = 32

    def __post_init__(self):
        if len(self.class_names) != 2:
            raise ValueError("tasks are binary")
        if self.image_size < 16:
            raise ValueError("image_size must be >= 16")


@dataclass(frozen=True)
class SourceSpec:
    source_id: str
    background: str  # "smooth" gradient or "striped" texture
    stroke_width: Tuple[float, float]
    color_jitter: float
    clutter_density: float
    noise_sigma: float
    texture_wave: str = "sine"

    def differing_style_params(self, other: "SourceSpec") -> int:
        keys = ("background", "stroke_width", "color_jitter", "clutter_density", "noise_sigma", "texture_wave")
        return sum(getattr(self, k) != getattr(other, k) for k in keys)


TASKS: Dict[str, TaskSpec] = {
    "easy": TaskSpec("easy", ("circle", "square")),
    "medium": TaskSpec("medium", ("blob", "blob-appendage")),
    "hard": TaskSpec("hard", ("texture-low", "texture-high")),
}

SOURCES: Dict[str, SourceSpec] = {
    "A": SourceSpec("A", "smooth", (0.0, 1.0), 0.10, 1.0, 0.02, "sine"),
    "B": SourceSpec("B", "striped", (1.0, 2.5), 0.25, 3.0, 0.05, "square"),
}


def get_task(task_id: str, image_size: int = 32) -> TaskSpec:
    base = TASKS[task_id]
    return TaskSpec(base.task_id, base.class_names, image_size)


def quantize(img: np.ndarray) -> np.ndarray:
    return from_uint8(np.round(np.clip(img, 0, 1) * 255).astype(np.uint8))


def from_uint8(arr: np.ndarray) -> np.ndarray:
    return arr.astype(np.float32) / np.float32(255)


def _image_rng(seed: int, task_id: str, source_id: str, label: int, index: int) -> np.random.Generator:
    ss = np.random.SeedSequence([int(seed), TASK_IDS.index(task_id), SOURCE_IDS.index(source_id), label, index])
    return np.random.default_rng(ss)


def _random_color(rng, base: np.ndarray, jitter: float) -> np.ndarray:
    return np.clip(base + rng.uniform(-jitter, jitter, 3), 0, 1)


def _background(rng, source: SourceSpec, s: int, yy, xx) -> np.ndarray:
    c1 = _random_color(rng, rng.uniform(0.2, 0.8, 3), source.color_jitter)
    c2 = _random_color(rng, c1, 0.3)
    if source.background == "smooth":
        angle = rng.uniform(0, 2 * np.pi)
        t = ((np.cos(angle) * xx + np.sin(angle) * yy) / s + 1) / 2
    else:
        angle = rng.uniform(0, np.pi)
        freq = rng.uniform(0.08, 0.2)
        t = (np.sin(2 * np.pi * freq * (np.cos(angle) * xx + np.sin(angle) * yy)) > 0).astype(float)
        t = 0.35 + 0.3 * t
    t = np.clip(t, 0, 1)[..., None]
    return c1 * (1 - t) + c2 * t


def _coverage(signed_distance: np.ndarray) -> np.ndarray:
    # analytic anti-aliasing: one-pixel ramp across the boundary
    return np.clip(0.5 - signed_distance, 0, 1)


def _contrasting_color(rng, background: np.ndarray, jitter: float) -> np.ndarray:
    mean = float(background.mean())
    level = mean - rng.uniform(0.3, 0.45) if mean > 0.5 else mean + rng.uniform(0.3, 0.45)
    return np.clip(level + rng.uniform(-jitter, jitter, 3), 0, 1)


def _paint(img, sd, color, rng, source: SourceSpec):
    stroke = rng.uniform(*source.stroke_width)
    fill = _coverage(sd)[..., None]
    img = img * (1 - fill) + color * fill
    if stroke > 0:
        ring = (_coverage(np.abs(sd + stroke / 2) - stroke / 2) * (fill[..., 0] > 0))[..., None]
        img = img * (1 - ring) + (color * 0.4) * ring
    return img


def _circle_sd(yy, xx, cy, cx, r):
    return np.hypot(yy - cy, xx - cx) - r


def _square_sd(yy, xx, cy, cx, half, angle):
    c, s_ = np.cos(angle), np.sin(angle)
    u = np.abs(c * (xx - cx) + s_ * (yy - cy)) - half
    v = np.abs(-s_ * (xx - cx) + c * (yy - cy)) - half
    outside = np.hypot(np.maximum(u, 0), np.maximum(v, 0))
    inside = np.minimum(np.maximum(u, v), 0)
    return outside + inside


def _blob_sd(yy, xx, cy, cx, r0, coeffs, phases):
    theta = np.arctan2(yy - cy, xx - cx)
    radius = r0 * (1 + sum(a * np.cos(k * theta + p) for k, a, p in zip((2, 3, 4), coeffs, phases)))
    return np.hypot(yy - cy, xx - cx) - radius


def _stalk_sd(yy, xx, cy, cx, angle, start, length, half_width):
    c, s_ = np.cos(angle), np.sin(angle)
    along = c * (xx - cx) + s_ * (yy - cy) - (start + length / 2)
    across = -s_ * (xx - cx) + c * (yy - cy)
    u = np.abs(along) - length / 2
    v = np.abs(across) - half_width
    return np.hypot(np.maximum(u, 0), np.maximum(v, 0)) + np.minimum(np.maximum(u, v), 0)


def _draw_object(rng, task: TaskSpec, source: SourceSpec, label: int, img, yy, xx):
    s = task.image_size
    if task.task_id == "easy":
        size = rng.uniform(0.2, 0.32) * s
        cy, cx = rng.uniform(size + 1, s - size - 1, 2)
        color = _contrasting_color(rng, img, source.color_jitter)
        if label == 0:
            sd = _circle_sd(yy, xx, cy, cx, size)
        else:
            sd = _square_sd(yy, xx, cy, cx, size * 0.89, rng.uniform(-0.25, 0.25))
        return _paint(img, sd, color, rng, source)
    if task.task_id == "medium":
        r0 = rng.uniform(0.13, 0.17) * s
        margin = r0 * 2.4
        cy, cx = rng.uniform(margin, s - margin, 2)
        sd = _blob_sd(yy, xx, cy, cx, r0, rng.uniform(0, 0.15, 3), rng.uniform(0, 2 * np.pi, 3))
        if label == 1:
            # thick arm ending in a round knob
            angle = rng.uniform(0, 2 * np.pi)
            length = r0 * rng.uniform(1.0, 1.3)
            stalk = _stalk_sd(yy, xx, cy, cx, angle, r0 * 0.7, length, r0 * rng.uniform(0.3, 0.4))
            tip = r0 * 0.7 + length
            knob = _circle_sd(yy, xx, cy + np.sin(angle) * tip, cx + np.cos(angle) * tip, r0 * 0.5)
            sd = np.minimum(sd, np.minimum(stalk, knob))
        color = _contrasting_color(rng, img, source.color_jitter)
        return _paint(img, sd, color, rng, source)
    # hard: oriented textures whose orientation ranges overlap between classes
    lo, hi = (0.0, 120.0) if label == 0 else (60.0, 180.0)
    angle = np.deg2rad(rng.uniform(lo, hi))
    freq = rng.uniform(0.12, 0.25)
    phase = rng.uniform(0, 2 * np.pi)
    wave = np.sin(2 * np.pi * freq * (np.cos(angle) * xx + np.sin(angle) * yy) + phase)
    if source.texture_wave == "square":
        wave = np.sign(wave) * 0.8
    color = _contrasting_color(rng, img, source.color_jitter)
    alpha = (rng.uniform(0.45, 0.8) * (wave + 1) / 2)[..., None]
    return img * (1 - alpha) + color * alpha


def _clutter(rng, source: SourceSpec, img, yy, xx):
    s = img.shape[0]
    for _ in range(rng.poisson(source.clutter_density)):
        cy, cx = rng.uniform(0, s, 2)
        color = rng.uniform(0, 1, 3)
        if rng.random() < 0.5:
            sd = _circle_sd(yy, xx, cy, cx, rng.uniform(0.5, 1.5))
        else:
            sd = _stalk_sd(yy, xx, cy, cx, rng.uniform(0, np.pi), 0, rng.uniform(2, 5), 0.4)
        m = _coverage(sd)[..., None]
        img = img * (1 - m) + color * m
    return img


def render_image(task: TaskSpec, source: SourceSpec, label: int, rng: np.random.Generator) -> np.ndarray:
    s = task.image_size
    yy, xx = np.mgrid[0:s, 0:s].astype(np.float64) + 0.5
    img = _background(rng, source, s, yy, xx)
    img = _draw_object(rng, task, source, label, img, yy, xx)
    img = _clutter(rng, source, img, yy, xx)
    img = img + rng.normal(0, source.noise_sigma, img.shape)
    return quantize(img)


@dataclass
class ImageSet:
    """Images (N, H, W, 3) in [0, 1] with integer labels and free-form provenance."""

    X: np.ndarray
    y: np.ndarray
    provenance: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.y)


def generate_dataset(task: TaskSpec, source: SourceSpec, seed: int, per_class_count: int = 1000) -> ImageSet:
    """Render ``per_class_count`` images for each of the task's two classes.

    Images are ordered class 0 first, then class 1.
    """
    if per_class_count < 50:
        raise ValueError("per_class_count must be >= 50")
    X = np.empty((2 * per_class_count, task.image_size, task.image_size, 3), dtype=np.float32)
    y = np.repeat(np.arange(2), per_class_count)
    for label in (0, 1):
        for i in range(per_class_count):
            rng = _image_rng(seed, task.task_id, source.source_id, label, i)
            X[label * per_class_count + i] = render_image(task, source, label, rng)
    prov = {"task": task.task_id, "source": source.source_id, "seed": int(seed), "per_class_count": per_class_count}
    return ImageSet(X, y, prov)

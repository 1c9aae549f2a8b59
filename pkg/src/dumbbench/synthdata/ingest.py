"""Loading user-supplied image folders (one sub-directory per class)."""
from __future__ import annotations

from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
from PIL import Image, UnidentifiedImageError

from ..errors import EmptyClassError, IngestError
from .generate import ImageSet, from_uint8

IMAGE_SUFFIXES = {".png"}


def load_image(path: Union[str, Path], image_size: int) -> np.ndarray:
    """Decode, convert to RGB and resize with antialiasing to ``image_size`` square."""
    try:
        with Image.open(path) as im:
            im = im.convert("RGB")
            if im.size != (image_size, image_size):
                im = im.resize((image_size, image_size), Image.Resampling.LANCZOS)
            arr = np.asarray(im, dtype=np.uint8)
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        raise IngestError(f"cannot decode {path}: {exc}") from exc
    return from_uint8(arr)


def ingest_folder(
    path: Union[str, Path], class_subdirs: Optional[Sequence[str]] = None, image_size: int = 32
) -> ImageSet:
    """Read ``path/<class>/*.png`` into an :class:`ImageSet`.

    ``class_subdirs`` fixes the label order (label i = i-th entry); by default the
    sub-directories are taken in sorted order. Files are read in sorted order.
    """
    root = Path(path)
    if class_subdirs is None:
        class_subdirs = sorted(p.name for p in root.iterdir() if p.is_dir())
    if len(class_subdirs) != 2:
        raise IngestError(f"expected two class folders in {root}, found {list(class_subdirs)}")
    images, labels = [], []
    for label, name in enumerate(class_subdirs):
        folder = root / name
        files = sorted(p for p in folder.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES) if folder.is_dir() else []
        if not files:
            raise EmptyClassError(f"no images for class {name!r} in {folder}")
        for f in files:
            images.append(load_image(f, image_size))
            labels.append(label)
    prov = {"ingested_from": str(root), "class_names": list(class_subdirs), "image_size": image_size}
    return ImageSet(np.stack(images), np.asarray(labels, dtype=np.int64), prov)

"""Image file loading and saving (the only module that touches pixels on disk)."""

import numpy as np
from PIL import Image

from .errors import ShotmarkError


class ImageIOError(ShotmarkError):
    """An image file could not be read or written."""


def load_image(path) -> np.ndarray:
    """Read an image file as uint8 grayscale (h, w) or RGB (h, w, 3)."""
    try:
        with Image.open(path) as im:
            if im.mode in ("L", "I;16", "I"):
                return np.asarray(im.convert("L"), dtype=np.uint8)
            return np.asarray(im.convert("RGB"), dtype=np.uint8)
    except (OSError, ValueError) as exc:
        raise ImageIOError(f"cannot read image {path}: {exc}") from exc


def save_image(path, img: np.ndarray) -> None:
    """Write a (h, w) or (h, w, 3) array as an image file; values clipped to [0, 255]."""
    arr = np.asarray(img)
    if arr.ndim not in (2, 3):
        raise ImageIOError(f"cannot save array of shape {arr.shape} as an image")
    arr = np.clip(np.round(arr.astype(np.float64)), 0, 255).astype(np.uint8)
    try:
        Image.fromarray(arr).save(path)
    except (OSError, ValueError) as exc:
        raise ImageIOError(f"cannot write image {path}: {exc}") from exc

"""Image preprocessing for encoder input: bicubic resize, center crop, normalize."""

from __future__ import annotations

import numpy as np
from PIL import Image

from .profiles import BackboneProfile


class PreprocessError(ValueError):
    pass


def preprocess_image(image: Image.Image, profile: BackboneProfile) -> np.ndarray:
    """RGB image -> float32 tensor [3, R, R].

    Shorter side is resized to R (bicubic), then center crop to R x R,
    pixel values scaled to [0, 1] and normalized per channel.
    """
    if image.width < 1 or image.height < 1:
        raise PreprocessError("image must have at least one pixel per side")
    if image.mode != "RGB":
        image = image.convert("RGB")
    r = profile.input_resolution
    if (image.width, image.height) != (r, r):
        scale = r / min(image.width, image.height)
        new_w = max(r, int(round(image.width * scale)))
        new_h = max(r, int(round(image.height * scale)))
        image = image.resize((new_w, new_h), Image.BICUBIC)
        left = (new_w - r) // 2
        top = (new_h - r) // 2
        image = image.crop((left, top, left + r, top + r))
    arr = np.asarray(image, dtype=np.float32) / 255.0   # [R, R, 3]
    arr = arr.transpose(2, 0, 1)                        # [3, R, R]
    mean = np.asarray(profile.channel_mean, dtype=np.float32).reshape(3, 1, 1)
    std = np.asarray(profile.channel_std, dtype=np.float32).reshape(3, 1, 1)
    return (arr - mean) / std


def load_image(path) -> Image.Image:
    try:
        img = Image.open(path)
        img.load()
    except Exception as exc:
        raise PreprocessError(f"cannot decode image {path}: {exc}") from None
    return img

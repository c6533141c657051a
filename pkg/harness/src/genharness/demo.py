"""Demo corpora: captioned artifact-free images standing in for the real half.

Captions come from a closed template grammar, so any requested count up
to the grammar's capacity yields distinct MSCOCO-style sentences. Images
are the mock synthesizer's artifact-free fields, one per caption.
"""

from __future__ import annotations

import os

from . import manifest_io
from .synthesize import mock_real_image

_ADJECTIVES = ("big", "small", "old", "red", "blue", "green", "white",
               "brown", "fluffy", "shiny", "wooden", "tiny", "colorful")
_NOUNS = ("cat", "dog", "horse", "bird", "truck", "bicycle", "boat",
          "train", "chair", "clock", "pizza", "bench", "umbrella", "vase")
_PLACES = ("park", "street", "kitchen", "field", "beach", "station",
           "garden", "market", "harbor", "forest", "museum", "yard")


def caption_pool(count: int) -> list[str]:
    pool = [f"a {adj} {noun} in the {place}"
            for adj in _ADJECTIVES for noun in _NOUNS for place in _PLACES]
    if count > len(pool):
        raise ValueError(f"caption grammar caps out at {len(pool)}")
    return pool[:count]


def build_demo_corpus(out_dir, manifest_path, counts=(160, 50, 50),
                      seed: int = 0, size: int = 64) -> int:
    """Write real-labelled images + manifest; counts = (train, val, test)."""
    captions = caption_pool(sum(counts))
    os.makedirs(out_dir, exist_ok=True)
    rows = []
    i = 0
    for split, n in zip(("train", "val", "test"), counts):
        for _ in range(n):
            caption = captions[i]
            sid = f"real-{split}-{i}"
            image_path = os.path.join(out_dir, f"{sid}.png")
            mock_real_image(caption, seed, size).save(image_path, "PNG")
            rows.append(manifest_io.make_row(
                id=sid, image_path=image_path, caption=caption,
                label="real", generator="none", split=split))
            i += 1
    manifest_io.write_rows(rows, manifest_path)
    return len(rows)

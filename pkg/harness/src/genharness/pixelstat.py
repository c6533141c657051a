"""Pixel-statistics embeddings written straight to the DEMB store format.

A weight-free stand-in for a pretrained image encoder: each image is
resized to a fixed grid and summarized per block and channel by mean,
spread, and horizontal/vertical gradient energy, then the whole vector
is L2-normalized. Gradient energy is exactly where resampling artifacts
of generative pipelines live, so these features give the detector a
learnable trace without any model weights.

The DEMB layout mirrors the detector's store contract: magic "DEMB",
version u16 = 1, flags u16 (bit0 = text present), count u32, dim_img
u32, dim_txt u32, then per record id_len u16 + id bytes + f32 vectors,
all little-endian.
"""

from __future__ import annotations

import os
import struct

import numpy as np
from PIL import Image

from . import manifest_io

RESIZE = 64
GRID = 4
STATS_PER_BLOCK = 4  # mean, std, |dx| mean, |dy| mean
FEATURE_DIM = GRID * GRID * 3 * STATS_PER_BLOCK  # 192

MAGIC = b"DEMB"
VERSION = 1


class PixelStatError(RuntimeError):
    pass


def embed_image(path) -> np.ndarray:
    try:
        with Image.open(path) as img:
            img = img.convert("RGB").resize((RESIZE, RESIZE),
                                            Image.Resampling.BILINEAR)
            pixels = np.asarray(img, dtype=np.float64) / 255.0
    except (OSError, ValueError) as exc:
        raise PixelStatError(f"{path}: {exc}") from None
    block = RESIZE // GRID
    feats = []
    for by in range(GRID):
        for bx in range(GRID):
            tile = pixels[by * block:(by + 1) * block,
                          bx * block:(bx + 1) * block, :]
            dx = np.abs(np.diff(tile, axis=1))
            dy = np.abs(np.diff(tile, axis=0))
            for c in range(3):
                feats.extend((tile[:, :, c].mean(), tile[:, :, c].std(),
                              dx[:, :, c].mean(), dy[:, :, c].mean()))
    vec = np.asarray(feats, dtype=np.float64)
    norm = np.linalg.norm(vec)
    if norm == 0:
        raise PixelStatError(f"{path}: degenerate all-zero features")
    return (vec / norm).astype(np.float32)


def write_demb(ids, vectors, path) -> None:
    vectors = [np.ascontiguousarray(v, dtype="<f4") for v in vectors]
    if len(ids) != len(vectors):
        raise PixelStatError("ids and vectors length mismatch")
    dim = len(vectors[0]) if vectors else FEATURE_DIM
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<HHIII", VERSION, 0, len(ids), dim, 0))
        for sid, vec in zip(ids, vectors):
            if vec.shape != (dim,):
                raise PixelStatError(f"{sid}: dim {vec.shape} != {dim}")
            raw = sid.encode("utf-8")
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)
            fh.write(vec.tobytes())
    os.replace(tmp, path)


def embed_manifest(manifest_path, out_path, image_root: str = "") -> int:
    """Embed every manifest image into a DEMB store; returns record count."""
    rows = manifest_io.read_rows(manifest_path)
    ids, vectors = [], []
    for row in rows:
        path = os.path.join(image_root, row["image_path"])
        ids.append(row["id"])
        vectors.append(embed_image(path))
    write_demb(ids, vectors, out_path)
    return len(ids)

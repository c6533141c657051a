import struct

import numpy as np
import pytest

from genharness import manifest_io
from genharness.pixelstat import (FEATURE_DIM, PixelStatError, embed_image,
                                  embed_manifest, write_demb)
from genharness.synthesize import mock_generated_image, mock_real_image

from conftest import run_diffdetect


def _save(img, path):
    img.save(path, "PNG")
    return str(path)


def test_embedding_shape_norm_and_determinism(tmp_path):
    path = _save(mock_real_image("a cat", 0, 64), tmp_path / "a.png")
    vec = embed_image(path)
    assert vec.shape == (FEATURE_DIM,)
    assert vec.dtype == np.float32
    assert np.linalg.norm(vec) == pytest.approx(1.0, abs=1e-5)
    assert np.array_equal(vec, embed_image(path))


def test_artifact_shifts_gradient_features(tmp_path):
    caption = "a dog in the yard"
    real = embed_image(_save(mock_real_image(caption, 0, 64),
                             tmp_path / "r.png"))
    gen = embed_image(_save(mock_generated_image(caption, 0, 64),
                            tmp_path / "g.png"))
    # per-block layout: mean, std, |dx|, |dy| per channel
    layout = np.arange(FEATURE_DIM).reshape(-1, 4)
    grad = layout[:, 2:].ravel()
    assert gen[grad].mean() > real[grad].mean() * 1.5


def test_unreadable_image_raises(tmp_path):
    bad = tmp_path / "bad.png"
    bad.write_bytes(b"not a png")
    with pytest.raises(PixelStatError):
        embed_image(bad)


def test_demb_header_layout(tmp_path):
    path = tmp_path / "f.demb"
    write_demb(["x"], [np.zeros(3, dtype=np.float32) + 0.5], path)
    raw = path.read_bytes()
    assert raw[:4] == b"DEMB"
    version, flags, count, dim_img, dim_txt = struct.unpack(
        "<HHIII", raw[4:20])
    assert (version, flags, count, dim_img, dim_txt) == (1, 0, 1, 3, 0)
    id_len = struct.unpack("<H", raw[20:22])[0]
    assert raw[22:22 + id_len] == b"x"
    assert len(raw) == 22 + id_len + 3 * 4


def test_store_readable_by_detector(tmp_path):
    """A pixelstat store must train cleanly through the detector CLI."""
    rows, ids = [], []
    for split, n in (("train", 8), ("val", 4), ("test", 4)):
        for i in range(n):
            for label, gen, maker in (("real", "none", mock_real_image),
                                      ("generated", "mock_diffusion",
                                       mock_generated_image)):
                sid = f"{split}-{label}-{i}"
                path = _save(maker(f"caption {split} {i}", 0, 64),
                             tmp_path / f"{sid}.png")
                rows.append(manifest_io.make_row(
                    id=sid, image_path=path, caption=f"caption {split} {i}",
                    label=label, generator=gen, split=split))
                ids.append(sid)
    manifest_path = tmp_path / "m.jsonl"
    manifest_io.write_rows(rows, manifest_path)
    store_path = tmp_path / "f.demb"
    assert embed_manifest(manifest_path, store_path) == len(rows)

    ckpt = tmp_path / "m.dmlp"
    proc = run_diffdetect(["train", "--features", str(store_path),
                           "--manifest", str(manifest_path),
                           "--mode", "image", "--seed", "3",
                           "--hidden", "8,4", "--epochs", "3",
                           "--batch-size", "4", "--out", str(ckpt)])
    assert proc.returncode == 0, proc.stderr
    assert ckpt.exists()

import json
import shutil
import subprocess

import pytest

from genharness import manifest_io

DIFFDETECT = shutil.which("diffdetect")


def run_diffdetect(args):
    """Invoke the detector CLI, the harness's only window into it."""
    if DIFFDETECT is None:
        pytest.skip("diffdetect CLI not on PATH")
    return subprocess.run([DIFFDETECT, *args], capture_output=True, text=True)


def real_row(i, caption, split="train"):
    return manifest_io.make_row(
        id=f"r{i}", image_path=f"unused/r{i}.png", caption=caption,
        label="real", generator="none", split=split)


@pytest.fixture
def real_manifest(tmp_path):
    rows = [real_row(i, f"a photo of sample {i}", split=s)
            for i, s in enumerate(("train", "train", "val", "test", "test"))]
    path = tmp_path / "real.jsonl"
    manifest_io.write_rows(rows, path)
    return path, rows


def load_jsonl(path):
    with open(path, "r", encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]

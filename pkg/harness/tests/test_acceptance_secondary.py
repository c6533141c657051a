"""Secondary acceptance: scaled replication through the detector CLI.

The full-scale numbers need GPU diffusion sampling and pretrained
encoders; this replication swaps in the harness's procedural generator
and weight-free pixel-statistics embeddings at ~30x smaller scale, and
asks only that the detector separates generated from real images with
test AUC >= 75 on >= 200 harness-generated captions.
"""

import json
import time

from genharness.cli import gen_dispatch

from conftest import run_diffdetect


def test_scaled_replication(tmp_path):
    start = time.monotonic()
    real = tmp_path / "real.jsonl"
    assert gen_dispatch(["make-demo", "--out-dir", str(tmp_path / "imgs"),
                         "--out-manifest", str(real),
                         "--counts", "130,40,40", "--seed", "0"]) == 0
    gen_dir = tmp_path / "gen"
    assert gen_dispatch(["run", "--manifest", str(real),
                         "--generator", "mock_diffusion",
                         "--out-dir", str(gen_dir), "--seed", "1"]) == 0

    merged = tmp_path / "merged.jsonl"
    proc = run_diffdetect(["build-manifest", "--in", str(real),
                           "--in", str(gen_dir / "generated.jsonl"),
                           "--out", str(merged), "--paired"])
    assert proc.returncode == 0, proc.stderr
    n_generated = sum(1 for line in merged.read_text().splitlines()
                      if '"generated"' in line)
    assert n_generated >= 200

    store = tmp_path / "features.demb"
    assert gen_dispatch(["embed", "--manifest", str(merged),
                         "--out", str(store)]) == 0

    ckpt = tmp_path / "model.dmlp"
    proc = run_diffdetect(["train", "--features", str(store),
                           "--manifest", str(merged), "--mode", "image",
                           "--seed", "1", "--hidden", "32,16",
                           "--epochs", "80", "--batch-size", "8",
                           "--out", str(ckpt)])
    assert proc.returncode == 0, proc.stderr

    report_path = tmp_path / "report.json"
    proc = run_diffdetect(["eval", "--model", str(ckpt),
                           "--features", str(store),
                           "--manifest", str(merged), "--mode", "image",
                           "--out", str(report_path)])
    assert proc.returncode == 0, proc.stderr
    report = json.loads(report_path.read_text())
    elapsed = time.monotonic() - start
    assert report["auc"] >= 75.0
    print(f"PASS scaled-replication: {n_generated} generated captions, "
          f"test auc {report['auc']:.1f} in {elapsed:.1f}s")

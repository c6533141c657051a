import json

import pytest

from diffdetect.cli import dispatch
from diffdetect.corpus import Manifest, write_manifest
from diffdetect.embedding import read_store

from conftest import make_record
from test_experiments import build_corpus
from test_linguistics import BIG_CAT_TOKENS, annotation_row, write_annotations
from diffdetect.backends import PlantedBias


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("cli")
    bias = {"stable_diffusion": PlantedBias(0, 0.5),
            "glide": PlantedBias(1, 0.5)}
    manifest_path, store_path = build_corpus(tmp, bias)
    return tmp, manifest_path, store_path


def test_help_exits_zero(capsys):
    assert dispatch(["--help"]) == 0
    assert dispatch(["train", "--help"]) == 0


def test_unknown_subcommand_exit_1(capsys):
    assert dispatch(["frobnicate"]) == 1
    assert "usage error" in capsys.readouterr().err


def test_unknown_flag_exit_1(capsys):
    assert dispatch(["gradcheck", "--bogus"]) == 1


def test_missing_required_flag_exit_1(capsys):
    assert dispatch(["train"]) == 1


def test_runtime_failure_exit_2(tmp_path, capsys):
    rc = dispatch(["extract", "--manifest", str(tmp_path / "missing.jsonl"),
                   "--backbone", "stub", "--mode", "image",
                   "--out", str(tmp_path / "o.demb")])
    assert rc == 2
    assert "error" in capsys.readouterr().err


def test_build_manifest_merge_and_validate(tmp_path):
    m1 = Manifest((make_record("a", caption="x"),))
    m2 = Manifest((make_record("b", label="generated", caption="x"),))
    p1, p2 = tmp_path / "m1.jsonl", tmp_path / "m2.jsonl"
    write_manifest(m1, p1)
    write_manifest(m2, p2)
    out = tmp_path / "merged.jsonl"
    assert dispatch(["build-manifest", "--in", str(p1), "--in", str(p2),
                     "--out", str(out), "--paired"]) == 0
    assert len(out.read_text().strip().splitlines()) == 2


def test_extract_writes_valid_store(tmp_path, four_record_manifest):
    mp = tmp_path / "m.jsonl"
    write_manifest(four_record_manifest, mp)
    out = tmp_path / "f.demb"
    rc = dispatch(["extract", "--manifest", str(mp), "--backbone", "stub",
                   "--mode", "image", "--out", str(out)])
    assert rc == 0
    store = read_store(out)
    assert len(store.records) == 4
    assert store.dim_txt == 0


def _train_args(manifest_path, store_path, out, seed="7"):
    return ["train", "--features", str(store_path), "--manifest",
            str(manifest_path), "--mode", "image", "--seed", seed,
            "--generator", "stable_diffusion", "--hidden", "16,8",
            "--epochs", "10", "--batch-size", "16", "--out", str(out)]


def test_train_twice_identical_checkpoints(corpus):
    tmp, manifest_path, store_path = corpus
    c1, c2 = tmp / "m1.dmlp", tmp / "m2.dmlp"
    assert dispatch(_train_args(manifest_path, store_path, c1)) == 0
    assert dispatch(_train_args(manifest_path, store_path, c2)) == 0
    assert c1.read_bytes() == c2.read_bytes()


def test_train_requires_seed(corpus):
    tmp, manifest_path, store_path = corpus
    args = _train_args(manifest_path, store_path, tmp / "x.dmlp")
    i = args.index("--seed")
    del args[i:i + 2]
    assert dispatch(args) == 1


def test_eval_and_categories_and_linguistics(corpus, capsys):
    tmp, manifest_path, store_path = corpus
    ckpt = tmp / "model.dmlp"
    assert dispatch(_train_args(manifest_path, store_path, ckpt)) == 0

    report_path = tmp / "report.json"
    rc = dispatch(["eval", "--model", str(ckpt), "--features", str(store_path),
                   "--manifest", str(manifest_path), "--mode", "image",
                   "--generator", "stable_diffusion",
                   "--out", str(report_path)])
    assert rc == 0
    report = json.loads(report_path.read_text())
    assert 0 <= report["accuracy"] <= 100
    assert report["confusion"]["tp"] + report["confusion"]["fn"] == 50

    cat_path = tmp / "cats.json"
    rc = dispatch(["analyze-categories", "--model", str(ckpt),
                   "--features", str(store_path), "--manifest",
                   str(manifest_path), "--mode", "image",
                   "--out", str(cat_path)])
    assert rc == 0
    cats = json.loads(cat_path.read_text())
    assert "unknown" in cats

    ann_path = tmp / "ann.jsonl"
    rows = [annotation_row(f"test-r{i}", "A big cat runs.", BIG_CAT_TOKENS,
                           n_entities=i % 2)
            for i in range(50)]
    rows += [annotation_row(f"test-stable_diffusion-{i}", "x" * (i + 1),
                            BIG_CAT_TOKENS[:i % 5], n_entities=0)
             for i in range(50)]
    write_annotations(ann_path, rows)
    ling_path = tmp / "ling.json"
    rc = dispatch(["analyze-linguistics", "--annotations", str(ann_path),
                   "--model", str(ckpt), "--features", str(store_path),
                   "--manifest", str(manifest_path), "--mode", "image",
                   "--generator", "stable_diffusion", "--out", str(ling_path)])
    assert rc == 0
    ling = json.loads(ling_path.read_text())
    assert set(ling["features"]) | set(ling["undefined"]) >= {"NOUN", "LENGTH"}

    svg_path = tmp / "fig.svg"
    assert dispatch(["plot", "--report", str(ling_path),
                     "--out", str(svg_path)]) == 0
    assert svg_path.read_text().startswith("<svg")


def test_cross_eval_grid(corpus):
    tmp, manifest_path, store_path = corpus
    grid = {
        "cells": [{
            "name": "orth", "dataset": "stubset",
            "train_generator": "stable_diffusion", "test_generator": "glide",
            "mode": "image", "backbone": "stub",
            "manifest_path": str(manifest_path),
            "store_path": str(store_path), "seed": 1,
            "hidden_dims": [32, 16], "max_epochs": 80, "batch_size": 8,
            "early_stop_patience": 80,
        }]
    }
    grid_path = tmp / "grid.json"
    grid_path.write_text(json.dumps(grid), encoding="utf-8")
    out_dir = tmp / "reports"
    assert dispatch(["cross-eval", "--grid", str(grid_path),
                     "--out", str(out_dir)]) == 0
    files = sorted(p.name for p in out_dir.iterdir())
    assert len(files) == 4
    for path in out_dir.iterdir():
        report = json.loads(path.read_text())
        if report["train_generator"] == report["test_generator"]:
            assert report["auc"] >= 99.0
        else:
            assert 40.0 <= report["auc"] <= 60.0


def test_gradcheck_passes():
    assert dispatch(["gradcheck", "--trials", "3", "--seed", "1"]) == 0


def test_analyze_linguistics_flag_validation(tmp_path, capsys):
    ann_path = tmp_path / "a.jsonl"
    write_annotations(ann_path, [annotation_row("x", "hi", [])])
    assert dispatch(["analyze-linguistics", "--annotations",
                     str(ann_path)]) == 1

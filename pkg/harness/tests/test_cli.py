from genharness.cli import annotate_dispatch, gen_dispatch

from conftest import load_jsonl


def test_help_exits_zero():
    assert gen_dispatch(["--help"]) == 0
    assert gen_dispatch(["run", "--help"]) == 0
    assert annotate_dispatch(["--help"]) == 0


def test_usage_errors_exit_one(capsys):
    assert gen_dispatch(["frobnicate"]) == 1
    assert gen_dispatch(["run"]) == 1
    assert gen_dispatch(["make-demo", "--out-dir", "x", "--out-manifest",
                         "y", "--counts", "1,2"]) == 1
    assert annotate_dispatch([]) == 1


def test_runtime_failure_exits_two(tmp_path, capsys):
    rc = gen_dispatch(["run", "--manifest", str(tmp_path / "missing.jsonl"),
                       "--generator", "mock_diffusion",
                       "--out-dir", str(tmp_path / "o"), "--seed", "0"])
    assert rc == 2
    assert "error" in capsys.readouterr().err


def test_demo_then_run_then_embed_then_annotate(tmp_path):
    real = tmp_path / "real.jsonl"
    assert gen_dispatch(["make-demo", "--out-dir", str(tmp_path / "imgs"),
                         "--out-manifest", str(real),
                         "--counts", "4,2,2", "--seed", "0"]) == 0
    out_dir = tmp_path / "gen"
    assert gen_dispatch(["run", "--manifest", str(real),
                         "--generator", "mock_diffusion",
                         "--out-dir", str(out_dir), "--seed", "1"]) == 0
    generated = load_jsonl(out_dir / "generated.jsonl")
    assert len(generated) == 8
    assert gen_dispatch(["embed", "--manifest", str(real),
                         "--out", str(tmp_path / "f.demb")]) == 0
    assert annotate_dispatch(["--manifest", str(real),
                              "--out", str(tmp_path / "ann.jsonl")]) == 0
    assert len(load_jsonl(tmp_path / "ann.jsonl")) == 8


def test_export_unknown_backbone_usage_error():
    assert gen_dispatch(["export-onnx", "--backbone", "clip-vit-b64",
                         "--out", "x"]) == 1

"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 runtime failure. Progress and
diagnostics go to stderr; machine-readable results go to files or stdout.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import experiments, linguistics, metrics, trainer
from .backends import OnnxBackend, PlantedBias, StubBackend
from .clip_bpe import ClipBpeTokenizer
from .corpus import Label, Manifest, Split, parse_manifest, write_manifest
from .embedding import (MODE_IMAGE_ONLY, MODE_IMAGE_TEXT, extract_corpus,
                        read_store)
from .profiles import get_profile


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


def _parse_bias(values):
    """--bias [generator=]index:beta, repeatable."""
    global_bias = None
    per_generator = {}
    for value in values or []:
        target, _, spec = value.rpartition("=")
        try:
            idx, beta = spec.split(":")
            bias = PlantedBias(direction=int(idx), magnitude=float(beta))
        except ValueError:
            raise UsageError(f"bad --bias value {value!r}; "
                             "expected [generator=]index:beta") from None
        if target:
            per_generator[target] = bias
        else:
            global_bias = bias
    return global_bias, per_generator


def _make_backend(args, profile):
    if args.backbone == "stub":
        global_bias, per_gen = _parse_bias(getattr(args, "bias", None))
        return StubBackend(profile, seed=args.seed, planted_bias=global_bias,
                           bias_generators=per_gen)
    return OnnxBackend(profile,
                       image_graph_path=args.onnx_image,
                       text_graph_path=args.onnx_text)


def _mode(arg: str) -> str:
    return MODE_IMAGE_TEXT if arg == "image_text" else MODE_IMAGE_ONLY


def cmd_build_manifest(args) -> int:
    records = []
    note_parts = []
    for path in args.inputs:
        m = parse_manifest(path)
        records.extend(m.records)
        if m.source_note:
            note_parts.append(m.source_note)
    manifest = Manifest(tuple(records),
                        source_note=args.source_note or "; ".join(note_parts))
    if args.paired:
        manifest.check_paired()
    write_manifest(manifest, args.out)
    _log(f"wrote {len(manifest)} records to {args.out}")
    return 0


def cmd_extract(args) -> int:
    profile = get_profile(args.backbone)
    if args.vocab:
        profile = get_profile(args.backbone, vocab_path=args.vocab,
                              merges_path=args.merges)
    manifest = parse_manifest(args.manifest)
    backend = _make_backend(args, profile)
    store = extract_corpus(manifest, backend, profile, _mode(args.mode),
                           args.out, image_root=args.image_root)
    _log(f"wrote {len(store.records)} embeddings to {args.out}")
    return 0


def _config_from_args(args, input_dim: int) -> trainer.MlpConfig:
    return trainer.MlpConfig(
        input_dim=input_dim,
        hidden_dims=tuple(int(h) for h in args.hidden.split(",")) if args.hidden
        else (4096, 4096, 1024),
        lr_start=args.lr_start,
        lr_end=args.lr_end,
        max_epochs=args.epochs,
        batch_size=args.batch_size,
        seed=args.seed,
        early_stop_patience=args.patience,
    )


def cmd_train(args) -> int:
    manifest = parse_manifest(args.manifest)
    if args.generator:
        manifest = manifest.filter(
            predicate=lambda r: r.label is Label.REAL
            or r.generator == args.generator)
    store = read_store(args.features)
    mode = _mode(args.mode)
    config = _config_from_args(args, store.feature_dim(mode))
    model, history = trainer.train(store, manifest, config, mode)
    trainer.save_checkpoint(model, args.out)
    if args.history:
        history.write_csv(args.history)
    _log(f"trained {len(history.epochs)} epochs, best epoch "
         f"{history.best_epoch}; checkpoint at {args.out}")
    return 0


def _scores_for_test(args):
    manifest = parse_manifest(args.manifest)
    store = read_store(args.features)
    model = trainer.load_checkpoint(args.model)
    mode = _mode(args.mode)
    test = manifest.filter(split=Split.TEST)
    if args.generator:
        test = test.filter(
            predicate=lambda r: r.label is Label.REAL
            or r.generator == args.generator)
    index = store.by_id()
    feats = np.stack([store.features_for(r.id, mode, index) for r in test])
    scores = trainer.forward(model, feats.astype(np.float32))
    labels = np.asarray([1 if r.label is Label.GENERATED else 0 for r in test])
    return scores, labels, test


def cmd_eval(args) -> int:
    scores, labels, test = _scores_for_test(args)
    conf = metrics.confusion_at_threshold(scores, labels)
    report = metrics.EvalReport(
        accuracy=metrics.accuracy((scores >= 0.5).astype(int), labels),
        auc=metrics.roc_auc(scores, labels),
        confusion=conf,
        n=int(len(labels)),
        mode=args.mode,
        test_generator=args.generator or "",
    )
    payload = json.dumps(report.to_json_obj(), indent=2)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(payload + "\n")
    else:
        print(payload)
    return 0


def cmd_cross_eval(args) -> int:
    specs = experiments.load_grid(args.grid)
    os.makedirs(args.out, exist_ok=True)
    for spec in specs:
        generators = sorted({spec.train_generator, spec.test_generator})
        matrix = experiments.run_cross(spec, generators)
        for (train_gen, test_gen), report in matrix.cells.items():
            name = f"{spec.name}__{train_gen}__{test_gen}.json"
            with open(os.path.join(args.out, name), "w", encoding="utf-8") as fh:
                json.dump(report.to_json_obj(), fh, indent=2, sort_keys=True)
                fh.write("\n")
            _log(f"{spec.name}: train={train_gen} test={test_gen} "
                 f"acc={report.accuracy:.1f} auc={report.auc:.1f}")
    return 0


def cmd_analyze_categories(args) -> int:
    scores, labels, test = _scores_for_test(args)
    cats = [r.macro_category.value for r in test]
    report = metrics.category_error_rates(scores, labels, cats)
    payload = json.dumps(report.to_json_obj(), indent=2, sort_keys=True)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(payload + "\n")
    else:
        print(payload)
    return 0


def cmd_analyze_linguistics(args) -> int:
    annotations = linguistics.parse_annotations(args.annotations)
    profiles = linguistics.profiles_from_annotations(annotations)
    if args.outcomes:
        with open(args.outcomes, "r", encoding="utf-8") as fh:
            outcomes = {k: int(v) for k, v in json.load(fh).items()}
    else:
        if not (args.model and args.features and args.manifest):
            raise UsageError("--outcomes or all of --model/--features/--manifest "
                             "are required")
        scores, labels, test = _scores_for_test(args)
        preds = (scores >= 0.5).astype(int)
        outcomes = {}
        for rec, pred, label in zip(test, preds, labels):
            if rec.id not in profiles:
                continue
            outcomes[rec.id] = int(pred) if args.target == "predicted" \
                else int(pred == label)
    report = linguistics.correlation_report(
        profiles, outcomes, generator=args.generator or "")
    payload = json.dumps(report.to_json_obj(), indent=2, sort_keys=True)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(payload + "\n")
    else:
        print(payload)
    return 0


def cmd_plot(args) -> int:
    with open(args.report, "r", encoding="utf-8") as fh:
        obj = json.load(fh)
    report = linguistics.CorrelationReport(
        features=obj["features"], undefined=tuple(obj.get("undefined", [])),
        n=obj.get("n", 0), model=obj.get("model", ""),
        generator=obj.get("generator", ""), dataset=obj.get("dataset", ""))
    _, svg = experiments.correlation_figure_data(report)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(svg)
    _log(f"wrote {args.out}")
    return 0


def cmd_gradcheck(args) -> int:
    rng = np.random.Generator(np.random.PCG64(args.seed))
    worst = 0.0
    for trial in range(args.trials):
        config = trainer.MlpConfig(
            input_dim=int(rng.integers(2, 9)),
            hidden_dims=tuple(int(rng.integers(2, 9))
                              for _ in range(int(rng.integers(1, 4)))),
            seed=int(rng.integers(0, 2 ** 31)),
        )
        err = trainer.gradient_check(config, batch_size=int(rng.integers(1, 9)),
                                     rng=rng)
        worst = max(worst, err)
    print(f"max relative error over {args.trials} trials: {worst:.3e}")
    if worst >= 1e-4:
        _log("gradient check FAILED (>= 1e-4)")
        return 2
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="diffdetect",
                     description="Detect diffusion-generated images from "
                                 "vision-language embeddings.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-manifest", help="merge/validate JSONL manifests")
    p.add_argument("--in", dest="inputs", action="append", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--paired", action="store_true",
                   help="enforce generated-caption pairing")
    p.add_argument("--source-note", default="")
    p.set_defaults(func=cmd_build_manifest)

    p = sub.add_parser("extract", help="embed a manifest into a store file")
    p.add_argument("--manifest", required=True)
    p.add_argument("--backbone", required=True,
                   choices=["stub", "clip-vit", "clip-rn50"])
    p.add_argument("--mode", required=True, choices=["image", "image_text"])
    p.add_argument("--out", required=True)
    p.add_argument("--image-root", default=".")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--bias", action="append",
                   help="stub planted bias, [generator=]index:beta")
    p.add_argument("--onnx-image", help="image encoder graph path")
    p.add_argument("--onnx-text", help="text encoder graph path")
    p.add_argument("--vocab", help="tokenizer vocab.json")
    p.add_argument("--merges", help="tokenizer merges.txt")
    p.set_defaults(func=cmd_extract)

    def add_train_flags(p, need_seed):
        p.add_argument("--features", required=True)
        p.add_argument("--manifest", required=True)
        p.add_argument("--mode", required=True, choices=["image", "image_text"])
        p.add_argument("--seed", type=int, required=need_seed, default=None
                       if need_seed else 0)
        p.add_argument("--hidden", default="",
                       help="comma-separated hidden dims (default 4096,4096,1024)")
        p.add_argument("--epochs", type=int, default=270)
        p.add_argument("--batch-size", type=int, default=256)
        p.add_argument("--lr-start", type=float, default=0.1)
        p.add_argument("--lr-end", type=float, default=0.001)
        p.add_argument("--patience", type=int, default=20)

    p = sub.add_parser("train", help="train the MLP detector")
    add_train_flags(p, need_seed=True)
    p.add_argument("--generator", default="",
                   help="restrict generated training samples to this generator")
    p.add_argument("--out", required=True, help="checkpoint path")
    p.add_argument("--history", default="", help="epoch history CSV path")
    p.set_defaults(func=cmd_train)

    def add_eval_flags(p):
        p.add_argument("--model", required=True, help="checkpoint path")
        p.add_argument("--features", required=True)
        p.add_argument("--manifest", required=True)
        p.add_argument("--mode", required=True, choices=["image", "image_text"])
        p.add_argument("--generator", default="")
        p.add_argument("--out", default="")

    p = sub.add_parser("eval", help="evaluate a checkpoint on the test split")
    add_eval_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("cross-eval", help="run a cross-generator grid")
    p.add_argument("--grid", required=True, help="grid spec (TOML or JSON)")
    p.add_argument("--out", required=True, help="report output directory")
    p.set_defaults(func=cmd_cross_eval)

    p = sub.add_parser("analyze-categories",
                       help="per-macro-category FN%%/FP%% on the test split")
    add_eval_flags(p)
    p.set_defaults(func=cmd_analyze_categories)

    p = sub.add_parser("analyze-linguistics",
                       help="correlate caption features with outcomes")
    p.add_argument("--annotations", required=True)
    p.add_argument("--outcomes", default="",
                   help="JSON id->0/1 map; omit to compute from a model")
    p.add_argument("--target", choices=["correctness", "predicted"],
                   default="correctness")
    p.add_argument("--model", default="")
    p.add_argument("--features", default="")
    p.add_argument("--manifest", default="")
    p.add_argument("--mode", choices=["image", "image_text"], default="image")
    p.add_argument("--generator", default="")
    p.add_argument("--out", default="")
    p.set_defaults(func=cmd_analyze_linguistics)

    p = sub.add_parser("plot", help="render a correlation report as SVG")
    p.add_argument("--report", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("gradcheck",
                       help="finite-difference check of backpropagation")
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gradcheck)

    return parser


def dispatch(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help and friends
        return 0 if exc.code in (0, None) else 1
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()

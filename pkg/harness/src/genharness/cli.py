"""Entry points: `gen` (generation/export/embedding) and `annotate`.

Exit codes follow the detector's convention: 0 success, 1 usage error,
2 runtime failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from typing import Optional, Sequence

from .annotate import AnnotationJob, annotate
from .demo import build_demo_corpus
from .export_onnx import BACKBONES, export_onnx
from .generate import GenerationJob, generate
from .pixelstat import embed_manifest


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _gen_parser() -> _Parser:
    parser = _Parser(prog="gen", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="generate images for real captions")
    run.add_argument("--manifest", required=True)
    run.add_argument("--generator", required=True)
    run.add_argument("--out-dir", required=True)
    run.add_argument("--out-manifest", default=None,
                     help="defaults to OUT_DIR/generated.jsonl")
    run.add_argument("--seed", type=int, required=True)
    run.add_argument("--size", type=int, default=None)
    run.add_argument("--steps", type=int, default=50)

    export = sub.add_parser("export-onnx", help="export encoders to ONNX")
    export.add_argument("--backbone", required=True,
                        choices=sorted(BACKBONES))
    export.add_argument("--out", required=True)
    export.add_argument("--weights", default=None)
    export.add_argument("--no-verify", action="store_true")

    embed = sub.add_parser(
        "embed", help="pixel-statistics embeddings to a DEMB store")
    embed.add_argument("--manifest", required=True)
    embed.add_argument("--out", required=True)
    embed.add_argument("--image-root", default="")

    demo = sub.add_parser(
        "make-demo", help="synthesize a real-labelled demo corpus")
    demo.add_argument("--out-dir", required=True)
    demo.add_argument("--out-manifest", required=True)
    demo.add_argument("--counts", default="160,50,50",
                      help="train,val,test record counts")
    demo.add_argument("--seed", type=int, default=0)
    demo.add_argument("--size", type=int, default=64)
    return parser


def _run_gen(args) -> int:
    if args.command == "run":
        out_manifest = args.out_manifest or os.path.join(
            args.out_dir, "generated.jsonl")
        job = GenerationJob(
            manifest_path=args.manifest, generator=args.generator,
            out_dir=args.out_dir, out_manifest=out_manifest,
            seed=args.seed, image_size=args.size, steps=args.steps)
        result = generate(job)
        print(f"produced {len(result.produced)}, skipped "
              f"{len(result.skipped)}, failed {len(result.failures)}",
              file=sys.stderr)
        return 0 if result.ok else 2
    if args.command == "export-onnx":
        result = export_onnx(args.backbone, args.out,
                             weights_path=args.weights,
                             verify=not args.no_verify)
        state = "verified" if result.verified else "not verified"
        print(f"exported {result.image_graph} and {result.text_graph} "
              f"(dim {result.dim}, {state})", file=sys.stderr)
        return 0
    if args.command == "embed":
        count = embed_manifest(args.manifest, args.out,
                               image_root=args.image_root)
        print(f"embedded {count} records", file=sys.stderr)
        return 0
    if args.command == "make-demo":
        try:
            counts = tuple(int(c) for c in args.counts.split(","))
        except ValueError:
            raise UsageError(f"bad --counts value {args.counts!r}") from None
        if len(counts) != 3:
            raise UsageError("--counts needs exactly train,val,test")
        count = build_demo_corpus(args.out_dir, args.out_manifest,
                                  counts=counts, seed=args.seed,
                                  size=args.size)
        print(f"wrote {count} records", file=sys.stderr)
        return 0
    raise UsageError(f"unknown command {args.command!r}")


def _annotate_parser() -> _Parser:
    parser = _Parser(prog="annotate",
                     description="annotate manifest captions")
    parser.add_argument("--manifest", required=True)
    parser.add_argument("--out", required=True)
    parser.add_argument("--lang", default="en")
    parser.add_argument("--pipeline", default="",
                        help="spaCy model name (optional)")
    return parser


def _dispatch(parser, runner, argv) -> int:
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return 0 if exc.code in (0, None) else 1
    try:
        return runner(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def gen_dispatch(argv: Optional[Sequence[str]] = None) -> int:
    return _dispatch(_gen_parser(), _run_gen, argv)


def annotate_dispatch(argv: Optional[Sequence[str]] = None) -> int:
    def runner(args):
        count = annotate(AnnotationJob(
            manifest_path=args.manifest, out_path=args.out,
            lang=args.lang, pipeline=args.pipeline))
        print(f"annotated {count} captions", file=sys.stderr)
        return 0
    return _dispatch(_annotate_parser(), runner, argv)


def gen_main() -> None:
    sys.exit(gen_dispatch())


def annotate_main() -> None:
    sys.exit(annotate_dispatch())

"""Generation jobs: one generated image per real caption, resumable.

A job walks the real records of an input manifest, synthesizes an image
for each caption, and appends a matching generated row (caption and
split copied from the source record) to the output manifest. Ids already
present in the output manifest whose image file exists are skipped, so
an interrupted run picks up where it left off. Per-caption failures are
logged and collected; callers decide the exit status.
"""

from __future__ import annotations

import os
import sys
from dataclasses import dataclass, field

from . import manifest_io
from .synthesize import DEFAULT_SIZES, get_synthesizer


class GenerationError(RuntimeError):
    pass


@dataclass(frozen=True)
class GenerationJob:
    manifest_path: str
    generator: str
    out_dir: str
    out_manifest: str
    seed: int
    image_size: int | None = None  # None -> generator default
    steps: int = 50

    def size(self) -> int:
        if self.image_size is not None:
            return self.image_size
        return DEFAULT_SIZES.get(self.generator, 256)


@dataclass
class GenerationResult:
    produced: list = field(default_factory=list)     # new ids
    skipped: list = field(default_factory=list)      # already done
    failures: list = field(default_factory=list)     # (id, message)

    @property
    def ok(self) -> bool:
        return not self.failures


def _out_id(job: GenerationJob, source_id: str) -> str:
    return f"{job.generator}-{source_id}"


def generate(job: GenerationJob, synthesizer=None,
             log=sys.stderr) -> GenerationResult:
    rows = manifest_io.read_rows(job.manifest_path)
    real_rows = [r for r in rows if r["label"] == "real"]
    if not real_rows:
        raise GenerationError(f"{job.manifest_path}: no real records to pair")

    if synthesizer is None:
        synthesizer = get_synthesizer(job.generator, steps=job.steps)
    os.makedirs(job.out_dir, exist_ok=True)
    done = set()
    if os.path.exists(job.out_manifest):
        done = {r["id"] for r in manifest_io.read_rows(job.out_manifest)}

    result = GenerationResult()
    size = job.size()
    for row in real_rows:
        out_id = _out_id(job, row["id"])
        image_path = os.path.join(job.out_dir, f"{out_id}.png")
        has_row = out_id in done
        if has_row and os.path.exists(image_path):
            result.skipped.append(out_id)
            continue
        try:
            image = synthesizer(row["caption"], job.seed, size)
            tmp = f"{image_path}.tmp"
            image.save(tmp, format="PNG")
            os.replace(tmp, image_path)
        except Exception as exc:
            print(f"generate: {out_id}: {exc}", file=log)
            result.failures.append((out_id, str(exc)))
            continue
        if has_row:  # row survived an interruption, only the image was lost
            result.produced.append(out_id)
            continue
        manifest_io.write_rows([manifest_io.make_row(
            id=out_id,
            image_path=image_path,
            caption=row["caption"],
            label="generated",
            generator=job.generator,
            split=row["split"],
            dataset=row["dataset"],
            category=row["category"],
            macro_category=row["macro_category"],
        )], job.out_manifest, append=True)
        result.produced.append(out_id)
    return result

"""Dataset manifests: one captioned image per record, JSONL on disk.

A manifest row ties an image path and caption to a real/generated label,
the generator that produced it, its source dataset, an optional category
tag with an animate/inanimate macro grouping, and a train/val/test split.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Iterable, Optional


class Label(Enum):
    REAL = "real"
    GENERATED = "generated"


class MacroCategory(Enum):
    ANIMATE = "animate"
    INANIMATE = "inanimate"
    UNKNOWN = "unknown"


class Split(Enum):
    TRAIN = "train"
    VAL = "val"
    TEST = "test"


# Canonical generator / dataset names; free-form strings are allowed for both
# ("other" sources), but these spellings are recognized everywhere.
GENERATOR_NONE = "none"
GENERATOR_STABLE_DIFFUSION = "stable_diffusion"
GENERATOR_GLIDE = "glide"

DATASET_MSCOCO = "mscoco"
DATASET_WIKIMEDIA = "wikimedia"


class ManifestError(ValueError):
    """Raised for schema or invariant violations in manifest data."""


@dataclass(frozen=True)
class SampleRecord:
    id: str
    image_path: str
    caption: str
    label: Label
    generator: str
    dataset: str
    category: Optional[str]
    macro_category: MacroCategory
    split: Split

    def __post_init__(self):
        if not self.id:
            raise ManifestError("record id must be non-empty")
        if not self.image_path:
            raise ManifestError(f"record {self.id!r}: image_path must be non-empty")
        if not self.generator:
            raise ManifestError(f"record {self.id!r}: generator must be non-empty")
        is_real = self.label is Label.REAL
        has_generator = self.generator != GENERATOR_NONE
        if is_real and has_generator:
            raise ManifestError(
                f"record {self.id!r}: label/generator inconsistency "
                f"(label=real but generator={self.generator!r})"
            )
        if not is_real and not has_generator:
            raise ManifestError(
                f"record {self.id!r}: label/generator inconsistency "
                "(label=generated but generator=none)"
            )

    @property
    def degenerate_caption(self) -> bool:
        return self.caption == ""

    def to_json_obj(self) -> dict:
        return {
            "id": self.id,
            "image_path": self.image_path,
            "caption": self.caption,
            "label": self.label.value,
            "generator": self.generator,
            "dataset": self.dataset,
            "category": self.category,
            "macro_category": self.macro_category.value,
            "split": self.split.value,
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "SampleRecord":
        required = {
            "id", "image_path", "caption", "label", "generator",
            "dataset", "category", "macro_category", "split",
        }
        missing = required - obj.keys()
        if missing:
            raise ManifestError(f"missing fields: {sorted(missing)}")
        extra = obj.keys() - required
        if extra:
            raise ManifestError(f"unknown fields: {sorted(extra)}")
        try:
            label = Label(obj["label"])
        except ValueError:
            raise ManifestError(f"unknown label value {obj['label']!r}") from None
        try:
            macro = MacroCategory(obj["macro_category"])
        except ValueError:
            raise ManifestError(
                f"unknown macro_category value {obj['macro_category']!r}"
            ) from None
        try:
            split = Split(obj["split"])
        except ValueError:
            raise ManifestError(f"unknown split value {obj['split']!r}") from None
        for key in ("id", "image_path", "caption", "generator", "dataset"):
            if not isinstance(obj[key], str):
                raise ManifestError(f"field {key!r} must be a string")
        if obj["category"] is not None and not isinstance(obj["category"], str):
            raise ManifestError("field 'category' must be a string or null")
        return cls(
            id=obj["id"],
            image_path=obj["image_path"],
            caption=obj["caption"],
            label=label,
            generator=obj["generator"],
            dataset=obj["dataset"],
            category=obj["category"],
            macro_category=macro,
            split=split,
        )


@dataclass(frozen=True)
class Manifest:
    records: tuple[SampleRecord, ...]
    source_note: str = ""

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        seen: dict[str, int] = {}
        for rec in self.records:
            if rec.id in seen:
                raise ManifestError(f"duplicate id {rec.id!r}")
            seen[rec.id] = 1

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def check_paired(self) -> None:
        """Every generated record's caption must match some real record's caption.

        Opt-in: the paper generates from real captions, user corpora may not.
        """
        real_captions = {r.caption for r in self.records if r.label is Label.REAL}
        unpaired = [
            r.id for r in self.records
            if r.label is Label.GENERATED and r.caption not in real_captions
        ]
        if unpaired:
            raise ManifestError(
                f"unpaired generated records (caption has no real counterpart): {unpaired}"
            )

    def filter(
        self,
        split: Optional[Split] = None,
        generator: Optional[str] = None,
        dataset: Optional[str] = None,
        macro_category: Optional[MacroCategory] = None,
        label: Optional[Label] = None,
        predicate: Optional[Callable[[SampleRecord], bool]] = None,
    ) -> "Manifest":
        """Subset preserving input order; all conditions must hold."""
        def keep(r: SampleRecord) -> bool:
            if split is not None and r.split is not split:
                return False
            if generator is not None and r.generator != generator:
                return False
            if dataset is not None and r.dataset != dataset:
                return False
            if macro_category is not None and r.macro_category is not macro_category:
                return False
            if label is not None and r.label is not label:
                return False
            if predicate is not None and not predicate(r):
                return False
            return True

        return Manifest(tuple(r for r in self.records if keep(r)),
                        source_note=self.source_note)

    def split_counts(self) -> dict[tuple[Split, Label], int]:
        counts: dict[tuple[Split, Label], int] = {}
        for r in self.records:
            key = (r.split, r.label)
            counts[key] = counts.get(key, 0) + 1
        return counts


def parse_manifest(path, *, paired: bool = False) -> Manifest:
    """Load a JSONL manifest; every line is one record.

    Errors carry 1-based line numbers. With paired=True the generated-caption
    pairing invariant is enforced after loading.
    """
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ManifestError(f"{path}:{lineno}: malformed JSON: {exc}") from None
            if not isinstance(obj, dict):
                raise ManifestError(f"{path}:{lineno}: expected a JSON object")
            try:
                records.append(SampleRecord.from_json_obj(obj))
            except ManifestError as exc:
                raise ManifestError(f"{path}:{lineno}: {exc}") from None
    manifest = Manifest(tuple(records))
    if paired:
        manifest.check_paired()
    return manifest


def write_manifest(manifest: Manifest, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in manifest.records:
            fh.write(json.dumps(rec.to_json_obj(), ensure_ascii=False))
            fh.write("\n")

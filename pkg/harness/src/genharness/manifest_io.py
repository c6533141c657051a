"""Manifest JSONL rows as plain dicts.

The detector package owns the schema; this module only reads and writes
rows in that shape and checks the handful of fields the harness relies
on. Full validation happens on the detector side (`diffdetect
build-manifest --paired`).
"""

from __future__ import annotations

import json

ROW_FIELDS = (
    "id", "image_path", "caption", "label", "generator",
    "dataset", "category", "macro_category", "split",
)


class ManifestIOError(ValueError):
    pass


def read_rows(path) -> list[dict]:
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ManifestIOError(
                    f"{path}:{lineno}: malformed JSON: {exc}") from None
            missing = set(ROW_FIELDS) - obj.keys()
            if missing:
                raise ManifestIOError(
                    f"{path}:{lineno}: missing fields: {sorted(missing)}")
            rows.append(obj)
    return rows


def write_rows(rows, path, append: bool = False) -> None:
    with open(path, "a" if append else "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False))
            fh.write("\n")


def make_row(id, image_path, caption, label, generator, split,
             dataset="mscoco", category=None, macro_category="unknown") -> dict:
    return {
        "id": id,
        "image_path": image_path,
        "caption": caption,
        "label": label,
        "generator": generator,
        "dataset": dataset,
        "category": category,
        "macro_category": macro_category,
        "split": split,
    }

"""Experiment grid: intra-generator cells, cross-generator matrices,
table rendering and the correlation heatmap figure.

A grid file (TOML or JSON) declares one cell per entry; every cell names
its manifest, embedding store, mode, backbone and seed explicitly so the
whole grid is reproducible from one command.
"""

from __future__ import annotations

import hashlib
import json
try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from . import metrics, trainer
from .corpus import Label, Manifest, Split, parse_manifest
from .embedding import MODE_IMAGE_ONLY, MODE_IMAGE_TEXT, EmbeddingStore, read_store
from .metrics import EvalReport


class ExperimentError(RuntimeError):
    pass


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    dataset: str
    train_generator: str
    test_generator: str
    mode: str                      # "image" | "image_text"
    backbone: str
    manifest_path: str
    store_path: str
    seed: int
    model_name: str = "MLP-Base"
    hidden_dims: tuple[int, ...] = (4096, 4096, 1024)
    lr_start: float = 0.1
    lr_end: float = 0.001
    max_epochs: int = 270
    batch_size: int = 256
    early_stop_patience: int = 20

    def __post_init__(self):
        object.__setattr__(self, "hidden_dims", tuple(self.hidden_dims))
        if self.mode not in (MODE_IMAGE_ONLY, MODE_IMAGE_TEXT):
            raise ExperimentError(f"unknown mode {self.mode!r}")


def _file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _mlp_config(spec: ExperimentSpec, input_dim: int) -> trainer.MlpConfig:
    return trainer.MlpConfig(
        input_dim=input_dim,
        hidden_dims=spec.hidden_dims,
        lr_start=spec.lr_start,
        lr_end=spec.lr_end,
        max_epochs=spec.max_epochs,
        batch_size=spec.batch_size,
        seed=spec.seed,
        early_stop_patience=spec.early_stop_patience,
    )


def _eval_cell(model, store: EmbeddingStore, manifest: Manifest,
               test_generator: str, mode: str) -> tuple:
    """Scores + labels over Test split (real + the named generator's fakes)."""
    test = manifest.filter(split=Split.TEST).filter(
        predicate=lambda r: r.label is Label.REAL or r.generator == test_generator)
    if len(test) == 0:
        raise ExperimentError(f"no test records for generator {test_generator!r}")
    index = store.by_id()
    feats = np.stack([store.features_for(r.id, mode, index) for r in test])
    labels = np.asarray([1 if r.label is Label.GENERATED else 0 for r in test])
    scores = trainer.forward(model, feats.astype(np.float32))
    return scores, labels, test


def _report_from(scores, labels, spec: ExperimentSpec,
                 test_generator: str, provenance: dict) -> EvalReport:
    conf = metrics.confusion_at_threshold(scores, labels)
    return EvalReport(
        accuracy=metrics.accuracy((scores >= 0.5).astype(int), labels),
        auc=metrics.roc_auc(scores, labels),
        confusion=conf,
        n=int(len(labels)),
        model=spec.model_name,
        dataset=spec.dataset,
        mode=spec.mode,
        features=spec.backbone,
        train_generator=spec.train_generator,
        test_generator=test_generator,
        provenance=provenance,
    )


def _train_for(spec: ExperimentSpec,
               manifest: Optional[Manifest] = None,
               store: Optional[EmbeddingStore] = None):
    manifest = manifest or parse_manifest(spec.manifest_path)
    store = store or read_store(spec.store_path)
    train_manifest = manifest.filter(
        predicate=lambda r: r.label is Label.REAL
        or r.generator == spec.train_generator)
    input_dim = store.feature_dim(spec.mode)
    config = _mlp_config(spec, input_dim)
    model, history = trainer.train(store, train_manifest, config, spec.mode)
    provenance = {
        "manifest_sha256": _file_sha256(spec.manifest_path),
        "store_sha256": _file_sha256(spec.store_path),
        "seed": spec.seed,
        "best_epoch": history.best_epoch,
    }
    return model, history, manifest, store, provenance


def run_intra(spec: ExperimentSpec) -> EvalReport:
    """Train and test against the same generator's fakes (plus reals)."""
    if spec.train_generator != spec.test_generator:
        raise ExperimentError("run_intra requires train_generator == test_generator")
    model, history, manifest, store, provenance = _train_for(spec)
    scores, labels, _ = _eval_cell(model, store, manifest,
                                   spec.test_generator, spec.mode)
    return _report_from(scores, labels, spec, spec.test_generator, provenance)


@dataclass(frozen=True)
class CrossMatrix:
    cells: dict  # (train_generator, test_generator) -> EvalReport

    def to_json_obj(self) -> dict:
        return {
            f"{tr}->{te}": rep.to_json_obj()
            for (tr, te), rep in self.cells.items()
        }


def run_cross(spec: ExperimentSpec, generators: Sequence[str]) -> CrossMatrix:
    """Train once per generator, evaluate each model on every generator's test fakes.

    Diagonal cells take the same code path as run_intra and match it exactly
    under the same seed.
    """
    manifest = parse_manifest(spec.manifest_path)
    store = read_store(spec.store_path)
    present = {r.generator for r in manifest if r.label is Label.GENERATED}
    missing = [g for g in generators if g not in present]
    if missing:
        raise ExperimentError(f"generators missing from manifest: {missing}")
    cells = {}
    for train_gen in generators:
        cell_spec = replace(spec, train_generator=train_gen,
                            test_generator=train_gen)
        model, history, _, _, provenance = _train_for(
            cell_spec, manifest=manifest, store=store)
        for test_gen in generators:
            scores, labels, _ = _eval_cell(model, store, manifest,
                                           test_gen, spec.mode)
            cells[(train_gen, test_gen)] = _report_from(
                scores, labels, cell_spec, test_gen, provenance)
    return CrossMatrix(cells=cells)


TABLE_COLUMNS = ("Model", "Dataset", "Mode", "Features", "Accuracy", "AUC")


def _row_values(report: EvalReport) -> tuple[str, ...]:
    return (report.model, report.dataset, report.mode, report.features,
            f"{report.accuracy:.1f}", f"{report.auc:.1f}")


def render_tables(reports: Sequence[EvalReport], fmt: str = "markdown") -> str:
    """One row per report, given order, percentages at one decimal place."""
    rows = [_row_values(r) for r in reports]
    if fmt == "csv":
        lines = [",".join(TABLE_COLUMNS)]
        lines += [",".join(row) for row in rows]
        return "\n".join(lines) + "\n"
    if fmt == "markdown":
        lines = ["| " + " | ".join(TABLE_COLUMNS) + " |",
                 "|" + "|".join(["---"] * len(TABLE_COLUMNS)) + "|"]
        lines += ["| " + " | ".join(row) + " |" for row in rows]
        return "\n".join(lines) + "\n"
    raise ExperimentError(f"unknown table format {fmt!r}")


def _diverging_color(r: float) -> str:
    """Blue (-1) through white (0) to red (+1)."""
    r = max(-1.0, min(1.0, r))
    if r >= 0:
        frac = r
        red, green, blue = 255, round(255 * (1 - frac)), round(255 * (1 - frac))
    else:
        frac = -r
        red, green, blue = round(255 * (1 - frac)), round(255 * (1 - frac)), 255
    return f"#{red:02x}{green:02x}{blue:02x}"


def correlation_figure_data(report) -> tuple[list, str]:
    """Single-column heatmap over features; undefined cells are hatched.

    Returns (grid, svg_text); grid rows are (feature, r-or-None). SVG bytes
    are deterministic for identical input.
    """
    from .linguistics import FEATURE_NAMES

    grid = []
    for name in FEATURE_NAMES:
        if name in report.features:
            grid.append((name, report.features[name]))
        elif name in report.undefined:
            grid.append((name, None))
    if not grid:
        raise ExperimentError("correlation report defines no features")

    cell_w, cell_h, label_w, pad = 48, 24, 140, 4
    height = pad * 2 + cell_h * len(grid)
    width = pad * 2 + label_w + cell_w + 60
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" font-family="monospace" font-size="12">',
        '<defs><pattern id="hatch" width="6" height="6" '
        'patternUnits="userSpaceOnUse">'
        '<path d="M0,6 L6,0" stroke="#888" stroke-width="1"/></pattern></defs>',
    ]
    for i, (name, r) in enumerate(grid):
        y = pad + i * cell_h
        fill = "url(#hatch)" if r is None else _diverging_color(r)
        text = "n/a" if r is None else f"{r:+.3f}"
        parts.append(
            f'<text x="{pad}" y="{y + cell_h - 8}">{name}</text>')
        parts.append(
            f'<rect x="{pad + label_w}" y="{y}" width="{cell_w}" '
            f'height="{cell_h - 2}" fill="{fill}" stroke="#333"/>')
        parts.append(
            f'<text x="{pad + label_w + cell_w + 6}" '
            f'y="{y + cell_h - 8}">{text}</text>')
    parts.append("</svg>")
    return grid, "\n".join(parts) + "\n"


def load_grid(path) -> list[ExperimentSpec]:
    """Read a grid file (TOML or JSON by extension) into cell specs."""
    path = str(path)
    if path.endswith(".toml"):
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    else:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    cells = data.get("cells")
    if not isinstance(cells, list) or not cells:
        raise ExperimentError("grid file must define a non-empty 'cells' list")
    specs = []
    for i, cell in enumerate(cells):
        try:
            if "hidden_dims" in cell:
                cell = dict(cell, hidden_dims=tuple(cell["hidden_dims"]))
            if "seed" not in cell:
                raise ExperimentError("every grid cell must set an explicit seed")
            specs.append(ExperimentSpec(**cell))
        except TypeError as exc:
            raise ExperimentError(f"grid cell {i}: {exc}") from None
    return specs

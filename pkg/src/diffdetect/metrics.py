"""Evaluation kernel: accuracy, tie-corrected ROC AUC, confusion counts,
per-macro-category error rates, and Pearson correlation.

Positive class is Generated throughout. All percentages are on a 0..100
scale to match the reporting convention of the tables these feed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np


class MetricError(ValueError):
    """Raised for ill-posed metric inputs (empty, single-class, zero variance)."""


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def to_json_obj(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn}


@dataclass(frozen=True)
class EvalReport:
    accuracy: float        # percent
    auc: float             # percent
    confusion: ConfusionCounts
    n: int
    model: str = "MLP-Base"
    dataset: str = ""
    mode: str = ""
    features: str = ""
    train_generator: str = ""
    test_generator: str = ""
    provenance: dict = field(default_factory=dict)

    def to_json_obj(self) -> dict:
        return {
            "model": self.model,
            "dataset": self.dataset,
            "mode": self.mode,
            "features": self.features,
            "train_generator": self.train_generator,
            "test_generator": self.test_generator,
            "accuracy": self.accuracy,
            "auc": self.auc,
            "confusion": self.confusion.to_json_obj(),
            "n": self.n,
            "provenance": self.provenance,
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "EvalReport":
        c = obj["confusion"]
        return cls(
            accuracy=obj["accuracy"],
            auc=obj["auc"],
            confusion=ConfusionCounts(tp=c["tp"], fp=c["fp"], tn=c["tn"], fn=c["fn"]),
            n=obj["n"],
            model=obj.get("model", ""),
            dataset=obj.get("dataset", ""),
            mode=obj.get("mode", ""),
            features=obj.get("features", ""),
            train_generator=obj.get("train_generator", ""),
            test_generator=obj.get("test_generator", ""),
            provenance=obj.get("provenance", {}),
        )


@dataclass(frozen=True)
class CategoryErrors:
    """FN%/FP% for one bucket; None means undefined (no members of that class)."""
    fn_pct: Optional[float]
    fp_pct: Optional[float]
    confusion: ConfusionCounts


@dataclass(frozen=True)
class CategoryErrorReport:
    buckets: dict  # category name -> CategoryErrors

    def to_json_obj(self) -> dict:
        out = {}
        for name, b in self.buckets.items():
            out[name] = {
                "fn_pct": b.fn_pct,
                "fp_pct": b.fp_pct,
                "confusion": b.confusion.to_json_obj(),
            }
        return out


def _as_1d(a, name: str) -> np.ndarray:
    arr = np.asarray(a)
    if arr.ndim != 1:
        raise MetricError(f"{name} must be 1-dimensional")
    return arr


def accuracy(predictions: Sequence[int], labels: Sequence[int]) -> float:
    preds = _as_1d(predictions, "predictions")
    labs = _as_1d(labels, "labels")
    if len(preds) != len(labs):
        raise MetricError("predictions and labels differ in length")
    if len(preds) == 0:
        raise MetricError("accuracy of empty input is undefined")
    return 100.0 * float(np.count_nonzero(preds == labs)) / len(preds)


def roc_auc(scores: Sequence[float], labels: Sequence[int]) -> float:
    """Normalized Mann-Whitney statistic via average ranks, as a percentage.

    Ties between a positive and a negative score count 0.5. O(n log n).
    """
    s = _as_1d(scores, "scores").astype(np.float64)
    y = _as_1d(labels, "labels")
    if len(s) != len(y):
        raise MetricError("scores and labels differ in length")
    n_pos = int(np.count_nonzero(y == 1))
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise MetricError("roc_auc needs at least one positive and one negative")

    order = np.argsort(s, kind="stable")
    sorted_s = s[order]
    # average (fractional) ranks, 1-based, tie groups share their mean rank
    ranks = np.empty(len(s), dtype=np.float64)
    i = 0
    while i < len(sorted_s):
        j = i
        while j + 1 < len(sorted_s) and sorted_s[j + 1] == sorted_s[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    rank_sum_pos = float(ranks[y == 1].sum())
    u = rank_sum_pos - n_pos * (n_pos + 1) / 2.0
    return 100.0 * u / (n_pos * n_neg)


def roc_auc_bruteforce(scores: Sequence[float], labels: Sequence[int]) -> float:
    """O(n^2) pairwise definition; the independent oracle for roc_auc."""
    s = _as_1d(scores, "scores").astype(np.float64)
    y = _as_1d(labels, "labels")
    pos = s[y == 1]
    neg = s[y != 1]
    if len(pos) == 0 or len(neg) == 0:
        raise MetricError("roc_auc needs at least one positive and one negative")
    total = 0.0
    for p in pos:
        for q in neg:
            if p > q:
                total += 1.0
            elif p == q:
                total += 0.5
    return 100.0 * total / (len(pos) * len(neg))


def confusion_at_threshold(
    scores: Sequence[float], labels: Sequence[int], threshold: float = 0.5
) -> ConfusionCounts:
    """Predict Generated iff score >= threshold (ties go positive)."""
    s = _as_1d(scores, "scores")
    y = _as_1d(labels, "labels")
    if len(s) != len(y):
        raise MetricError("scores and labels differ in length")
    pred = s >= threshold
    pos = y == 1
    return ConfusionCounts(
        tp=int(np.count_nonzero(pred & pos)),
        fp=int(np.count_nonzero(pred & ~pos)),
        tn=int(np.count_nonzero(~pred & ~pos)),
        fn=int(np.count_nonzero(~pred & pos)),
    )


def category_error_rates(
    scores: Sequence[float],
    labels: Sequence[int],
    macro_categories: Sequence[str],
    threshold: float = 0.5,
) -> CategoryErrorReport:
    """Per-bucket FN% (generated predicted real) and FP% (real predicted generated).

    A bucket with no generated members has fn_pct=None (undefined, never 0);
    likewise fp_pct for no real members. Unrecognized category strings form
    their own buckets.
    """
    s = _as_1d(scores, "scores")
    y = _as_1d(labels, "labels")
    cats = list(macro_categories)
    if not (len(s) == len(y) == len(cats)):
        raise MetricError("scores, labels and macro_categories differ in length")
    buckets: dict[str, CategoryErrors] = {}
    for cat in dict.fromkeys(cats):  # preserve first-seen order
        mask = np.array([c == cat for c in cats])
        conf = confusion_at_threshold(s[mask], y[mask], threshold)
        fn_pct = 100.0 * conf.fn / (conf.fn + conf.tp) if (conf.fn + conf.tp) else None
        fp_pct = 100.0 * conf.fp / (conf.fp + conf.tn) if (conf.fp + conf.tn) else None
        buckets[cat] = CategoryErrors(fn_pct=fn_pct, fp_pct=fp_pct, confusion=conf)
    return CategoryErrorReport(buckets=buckets)


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    xs = _as_1d(x, "x").astype(np.float64)
    ys = _as_1d(y, "y").astype(np.float64)
    if len(xs) != len(ys):
        raise MetricError("x and y differ in length")
    if len(xs) < 2:
        raise MetricError("pearson needs at least 2 samples")
    dx = xs - xs.mean()
    dy = ys - ys.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        raise MetricError("pearson undefined for zero-variance input")
    return float((dx @ dy) / np.sqrt(sxx * syy))

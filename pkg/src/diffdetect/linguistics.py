"""Caption feature profiles (22 features) and their correlation with
classifier outcomes.

Token annotations arrive via a JSONL contract (see parse_annotations) so no
NLP stack is needed here; each profile counts universal POS tags plus
stop-word, non-alphabetic and whitespace tokens, caption character length,
and named-entity spans.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

from . import metrics

UPOS_TAGS = (
    "ADJ", "ADP", "ADV", "AUX", "CCONJ", "DET", "INTJ", "NOUN", "NUM",
    "PART", "PRON", "PROPN", "PUNCT", "SCONJ", "SYM", "VERB", "X", "SPACE",
)

FEATURE_NAMES = ("LENGTH", *UPOS_TAGS, "STOPS", "NON_ALPHA", "NAMED_ENTITIES")


class AnnotationError(ValueError):
    pass


@dataclass(frozen=True)
class TokenAnnotation:
    text: str
    upos: str
    is_stop: bool
    is_alpha: bool
    is_space: bool

    def __post_init__(self):
        if self.upos not in UPOS_TAGS:
            raise AnnotationError(f"unknown upos tag {self.upos!r}")


@dataclass(frozen=True)
class LinguisticProfile:
    counts: dict  # feature name -> non-negative int

    def __post_init__(self):
        if set(self.counts) != set(FEATURE_NAMES):
            raise AnnotationError("profile must cover exactly the known features")
        if any(v < 0 for v in self.counts.values()):
            raise AnnotationError("profile counts must be non-negative")

    def __getitem__(self, feature: str) -> int:
        return self.counts[feature]


def profile(caption: str, tokens: Sequence[TokenAnnotation],
            n_entities: int) -> LinguisticProfile:
    counts = {name: 0 for name in FEATURE_NAMES}
    counts["LENGTH"] = len(caption)
    counts["NAMED_ENTITIES"] = n_entities
    for tok in tokens:
        counts[tok.upos] += 1
        if tok.is_stop:
            counts["STOPS"] += 1
        if not tok.is_alpha:
            counts["NON_ALPHA"] += 1
    return LinguisticProfile(counts=counts)


def parse_annotations(path) -> dict:
    """Load annotations JSONL: id -> (caption, tokens, n_entities)."""
    out: dict[str, tuple[str, tuple[TokenAnnotation, ...], int]] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise AnnotationError(
                    f"{path}:{lineno}: malformed JSON: {exc}") from None
            try:
                tokens = tuple(
                    TokenAnnotation(
                        text=t["text"], upos=t["upos"], is_stop=t["is_stop"],
                        is_alpha=t["is_alpha"], is_space=t["is_space"])
                    for t in obj["tokens"]
                )
                out[obj["id"]] = (obj["caption"], tokens, int(obj["n_entities"]))
            except (KeyError, TypeError, AnnotationError) as exc:
                raise AnnotationError(f"{path}:{lineno}: {exc}") from None
    return out


def profiles_from_annotations(annotations: Mapping) -> dict:
    return {
        sid: profile(caption, tokens, n_entities)
        for sid, (caption, tokens, n_entities) in annotations.items()
    }


@dataclass(frozen=True)
class CorrelationReport:
    features: dict           # feature name -> r, defined ones only
    undefined: tuple[str, ...]
    n: int
    model: str = ""
    generator: str = ""
    dataset: str = ""

    def to_json_obj(self) -> dict:
        return {
            "model": self.model,
            "generator": self.generator,
            "dataset": self.dataset,
            "features": self.features,
            "undefined": list(self.undefined),
            "n": self.n,
        }


def correlation_report(
    profiles: Mapping[str, LinguisticProfile],
    outcomes: Mapping[str, int],
    model: str = "",
    generator: str = "",
    dataset: str = "",
) -> CorrelationReport:
    """Pearson r between each feature and the per-sample outcome indicator.

    Outcomes are typically correctness (1 = classified correctly); any 0/1
    indicator works. Zero-variance features (or outcomes) are reported as
    undefined rather than 0.
    """
    ids = sorted(set(outcomes) & set(profiles))
    if not ids:
        raise AnnotationError("no overlap between outcome ids and profile ids")
    if len(ids) < 2:
        raise AnnotationError("correlation needs at least 2 samples")
    missing = set(outcomes) - set(profiles)
    if missing:
        raise AnnotationError(f"outcomes reference unknown ids: {sorted(missing)}")
    y = [outcomes[i] for i in ids]
    features: dict[str, float] = {}
    undefined: list[str] = []
    for name in FEATURE_NAMES:
        x = [profiles[i][name] for i in ids]
        try:
            features[name] = metrics.pearson(x, y)
        except metrics.MetricError:
            undefined.append(name)
    return CorrelationReport(features=features, undefined=tuple(undefined),
                             n=len(ids), model=model, generator=generator,
                             dataset=dataset)

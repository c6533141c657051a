import json

import pytest

from genharness import manifest_io
from genharness.annotate import (AnnotateError, AnnotationJob, UPOS_TAGS,
                                 annotate, rule_annotate)

from conftest import load_jsonl, run_diffdetect


def words(tokens):
    return [(t["text"], t["upos"]) for t in tokens if not t["is_space"]]


def test_big_cat_example():
    tokens, n_entities = rule_annotate("A big cat runs.")
    assert words(tokens) == [("A", "DET"), ("big", "ADJ"), ("cat", "NOUN"),
                             ("runs", "VERB"), (".", "PUNCT")]
    assert n_entities == 0


def test_empty_caption():
    tokens, n_entities = rule_annotate("")
    assert tokens == [] and n_entities == 0


def test_james_visited_usa_two_entities():
    tokens, n_entities = rule_annotate("James visited USA.")
    assert words(tokens) == [("James", "PROPN"), ("visited", "VERB"),
                             ("USA", "PROPN"), (".", "PUNCT")]
    assert n_entities == 2


def test_adjacent_propn_is_one_entity_span():
    _, n_entities = rule_annotate("Gary met Sarah Connor in London")
    # Sarah Connor is one span; Gary and London are one each
    assert n_entities == 3


def test_numbers_symbols_and_stops():
    tokens, _ = rule_annotate("the 2 cats cost $5")
    tags = dict(words(tokens))
    assert tags["2"] == "NUM" and tags["$"] == "SYM"
    the = next(t for t in tokens if t["text"] == "the")
    assert the["is_stop"] and the["is_alpha"]


def test_all_tags_in_universal_inventory():
    captions = ["Wow, she quickly normalized THE thing!",
                "a 3.5m boat; see http://x.example", "  spaced  out  ",
                "L'objet, c'est ça?", "if only they could fly home"]
    for caption in captions:
        tokens, _ = rule_annotate(caption)
        assert all(t["upos"] in UPOS_TAGS for t in tokens)


def test_annotate_manifest_round_trip(tmp_path, real_manifest):
    manifest_path, rows = real_manifest
    out = tmp_path / "ann.jsonl"
    job = AnnotationJob(manifest_path=str(manifest_path), out_path=str(out))
    assert annotate(job) == len(rows)
    ann = load_jsonl(out)
    assert [a["id"] for a in ann] == [r["id"] for r in rows]
    for a, r in zip(ann, rows):
        assert a["caption"] == r["caption"]
        assert isinstance(a["n_entities"], int)
        for tok in a["tokens"]:
            assert set(tok) == {"text", "upos", "is_stop", "is_alpha",
                                "is_space"}


def test_unsupported_language_rejected(tmp_path, real_manifest):
    manifest_path, _ = real_manifest
    job = AnnotationJob(manifest_path=str(manifest_path),
                        out_path=str(tmp_path / "x.jsonl"), lang="xx")
    with pytest.raises(AnnotateError):
        annotate(job)


def test_output_consumable_by_detector_cli(tmp_path, real_manifest):
    """The detector's analysis stage must accept our annotations as-is."""
    manifest_path, rows = real_manifest
    ann_path = tmp_path / "ann.jsonl"
    annotate(AnnotationJob(manifest_path=str(manifest_path),
                           out_path=str(ann_path)))
    outcomes = {r["id"]: i % 2 for i, r in enumerate(rows)}
    outcomes_path = tmp_path / "outcomes.json"
    outcomes_path.write_text(json.dumps(outcomes), encoding="utf-8")
    report_path = tmp_path / "corr.json"
    proc = run_diffdetect(["analyze-linguistics",
                           "--annotations", str(ann_path),
                           "--outcomes", str(outcomes_path),
                           "--out", str(report_path)])
    assert proc.returncode == 0, proc.stderr
    report = json.loads(report_path.read_text())
    assert report["n"] == len(rows)


def test_deterministic(tmp_path, real_manifest):
    manifest_path, _ = real_manifest
    outs = []
    for name in ("a.jsonl", "b.jsonl"):
        out = tmp_path / name
        annotate(AnnotationJob(manifest_path=str(manifest_path),
                               out_path=str(out)))
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]

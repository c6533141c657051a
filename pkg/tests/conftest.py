import json

import pytest

from diffdetect.corpus import (Label, MacroCategory, Manifest, SampleRecord,
                               Split)


def make_record(
    rid,
    label="real",
    generator=None,
    split="train",
    caption=None,
    dataset="mscoco",
    category=None,
    macro_category="unknown",
    image_path=None,
):
    if generator is None:
        generator = "none" if label == "real" else "stable_diffusion"
    return SampleRecord(
        id=rid,
        image_path=image_path or f"images/{rid}.png",
        caption=f"caption for {rid}" if caption is None else caption,
        label=Label(label),
        generator=generator,
        dataset=dataset,
        category=category,
        macro_category=MacroCategory(macro_category),
        split=Split(split),
    )


@pytest.fixture
def four_record_manifest():
    """2 real MSCOCO + 2 generated StableDiffusion with paired captions."""
    return Manifest((
        make_record("r1", caption="a dog on a beach"),
        make_record("r2", caption="two cups of coffee"),
        make_record("g1", label="generated", caption="a dog on a beach"),
        make_record("g2", label="generated", caption="two cups of coffee"),
    ))


# ---------------------------------------------------------------------------
# Tokenizer fixture data: a small vocab.json + merges.txt pair in the same
# format as the published files. Built deterministically.

from diffdetect.clip_bpe import bytes_to_unicode

# full byte alphabet, like the published vocabularies, so any UTF-8 input
# always has a fallback symbol
_FIXTURE_CHARS = "".join(bytes_to_unicode()[b] for b in range(256))
_FIXTURE_MERGES = [
    ("c", "a"),
    ("ca", "t</w>"),
    ("p", "h"),
    ("ph", "o"),
    ("t", "o</w>"),
    ("pho", "to</w>"),
    ("o", "f</w>"),
    ("d", "o"),
    ("do", "g</w>"),
    ("r", "u"),
    ("n", "s</w>"),
    ("ru", "ns</w>"),
]


def build_fixture_vocab():
    tokens = ["<|startoftext|>", "<|endoftext|>"]
    for ch in _FIXTURE_CHARS:
        tokens.append(ch)
        tokens.append(ch + "</w>")
    for a, b in _FIXTURE_MERGES:
        merged = a + b
        if merged not in tokens:
            tokens.append(merged)
    return {tok: i for i, tok in enumerate(tokens)}


@pytest.fixture(scope="session")
def tokenizer_files(tmp_path_factory):
    root = tmp_path_factory.mktemp("tok")
    vocab = build_fixture_vocab()
    vocab_path = root / "vocab.json"
    merges_path = root / "merges.txt"
    vocab_path.write_text(json.dumps(vocab), encoding="utf-8")
    merges_path.write_text(
        "#version: fixture\n"
        + "\n".join(f"{a} {b}" for a, b in _FIXTURE_MERGES) + "\n",
        encoding="utf-8")
    return {"vocab_path": vocab_path, "merges_path": merges_path,
            "vocab": vocab, "merges": list(_FIXTURE_MERGES)}

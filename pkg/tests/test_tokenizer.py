import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diffdetect.clip_bpe import (EOT_TOKEN, PAD_ID, SOT_TOKEN, ClipBpeTokenizer,
                                 TokenizerError, bytes_to_unicode)

from conftest import build_fixture_vocab


@pytest.fixture(scope="module")
def tok(tokenizer_files):
    return ClipBpeTokenizer.from_files(
        tokenizer_files["vocab_path"], tokenizer_files["merges_path"],
        context_length=16)


def reference_encode(text, vocab, merges):
    """Independent oracle: apply merges one at a time in rank order,
    scanning the whole word per merge (no priority queue)."""
    import regex as re
    text = re.sub(r"\s+", " ", text).strip().lower()
    pattern = re.compile(
        r"""<\|startoftext\|>|<\|endoftext\|>|'s|'t|'re|'ve|'m|'ll|'d|"""
        r"""[\p{L}]+|[\p{N}]|[^\s\p{L}\p{N}]+""", re.IGNORECASE)
    byte_encoder = bytes_to_unicode()
    ids = []
    for token in pattern.findall(text):
        token = "".join(byte_encoder[b] for b in token.encode("utf-8"))
        word = list(token[:-1]) + [token[-1] + "</w>"]
        for a, b in merges:  # ranked order; rescan until no occurrence
            i = 0
            while i < len(word) - 1:
                if word[i] == a and word[i + 1] == b:
                    word[i:i + 2] = [a + b]
                else:
                    i += 1
        ids.extend(vocab[piece] for piece in word)
    return ids


def test_empty_caption(tok):
    seq = tok.tokenize("")
    assert seq.effective_length == 2
    assert seq.ids[0] == tok.sot_id
    assert seq.ids[1] == tok.eot_id
    assert all(i == PAD_ID for i in seq.ids[2:])


def test_reference_caption_frozen_ids(tok, tokenizer_files):
    vocab = tokenizer_files["vocab"]
    # oracle output for "a photo of a cat" under the fixture merges:
    # a</w>, photo</w>, of</w>, a</w>, cat</w>
    expected_body = [vocab["a</w>"], vocab["photo</w>"], vocab["of</w>"],
                     vocab["a</w>"], vocab["cat</w>"]]
    assert reference_encode("a photo of a cat", vocab,
                            tokenizer_files["merges"]) == expected_body
    seq = tok.tokenize("a photo of a cat")
    assert list(seq.ids[:7]) == [tok.sot_id] + expected_body + [tok.eot_id]
    assert seq.effective_length == 7


def test_matches_reference_on_mixed_captions(tok, tokenizer_files):
    captions = [
        "A CAT runs!", "photo   of\tdog", "cat cat cat", "dog?", "12 dogs",
        "a-b.c", "café cat",
    ]
    for caption in captions:
        assert tok.encode(caption) == reference_encode(
            caption, tokenizer_files["vocab"], tokenizer_files["merges"])


def test_long_caption_truncated(tok):
    caption = " ".join(["cat"] * 500)
    seq = tok.tokenize(caption)
    assert seq.effective_length == tok.context_length
    assert seq.ids[-1] == tok.eot_id
    assert len(seq.ids) == tok.context_length


def test_case_and_whitespace_normalized(tok):
    assert tok.encode("  A   Photo ") == tok.encode("a photo")


def test_missing_files():
    with pytest.raises(TokenizerError, match="vocab"):
        ClipBpeTokenizer.from_files("/nonexistent/v.json", "/nonexistent/m.txt")


def test_vocab_missing_specials():
    with pytest.raises(TokenizerError, match="special"):
        ClipBpeTokenizer({"a": 0}, [])


def test_bytes_to_unicode_bijective():
    mapping = bytes_to_unicode()
    assert len(mapping) == 256
    assert len(set(mapping.values())) == 256


@settings(max_examples=1000, deadline=None)
@given(st.text(alphabet="abcdefghijklmnopqrstuvwxyz .?!'-0123456789é",
               max_size=60))
def test_token_sequence_invariants_fuzz(tokenizer_files, s):
    tok = ClipBpeTokenizer.from_files(
        tokenizer_files["vocab_path"], tokenizer_files["merges_path"],
        context_length=16)
    seq = tok.tokenize(s)
    assert len(seq.ids) == 16
    assert seq.ids[0] == tok.sot_id
    assert seq.ids[seq.effective_length - 1] == tok.eot_id
    assert all(i == PAD_ID for i in seq.ids[seq.effective_length:])
    assert 2 <= seq.effective_length <= 16

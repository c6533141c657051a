"""Byte-pair tokenizer over a vocab.json + merges.txt pair.

Implements the text pipeline used by contrastive vision-language encoders:
lowercase + whitespace normalization, regex pre-tokenization, a reversible
byte-to-unicode alphabet, ranked pair merging with an end-of-word marker,
then start/end wrapping, truncation and zero padding to a fixed context.
"""

from __future__ import annotations

import functools
import json
from dataclasses import dataclass

import regex as re

SOT_TOKEN = "<|startoftext|>"
EOT_TOKEN = "<|endoftext|>"
PAD_ID = 0

_PRETOKEN_PATTERN = re.compile(
    r"""<\|startoftext\|>|<\|endoftext\|>|'s|'t|'re|'ve|'m|'ll|'d|"""
    r"""[\p{L}]+|[\p{N}]|[^\s\p{L}\p{N}]+""",
    re.IGNORECASE,
)


class TokenizerError(ValueError):
    pass


@dataclass(frozen=True)
class TokenSequence:
    ids: tuple[int, ...]
    effective_length: int


@functools.lru_cache(maxsize=1)
def bytes_to_unicode() -> dict[int, str]:
    """Map every byte to a printable unicode char (the GPT-2 alphabet)."""
    bs = (list(range(ord("!"), ord("~") + 1))
          + list(range(ord("\xa1"), ord("\xac") + 1))
          + list(range(ord("\xae"), ord("\xff") + 1)))
    cs = bs[:]
    n = 0
    for b in range(256):
        if b not in bs:
            bs.append(b)
            cs.append(256 + n)
            n += 1
    return dict(zip(bs, map(chr, cs)))


def _get_pairs(word: tuple[str, ...]) -> set[tuple[str, str]]:
    return {(word[i], word[i + 1]) for i in range(len(word) - 1)}


class ClipBpeTokenizer:
    def __init__(self, vocab: dict[str, int], merges: list[tuple[str, str]],
                 context_length: int = 77):
        if context_length < 2:
            raise TokenizerError("context_length must be >= 2")
        self.encoder = dict(vocab)
        for special in (SOT_TOKEN, EOT_TOKEN):
            if special not in self.encoder:
                raise TokenizerError(f"vocab is missing special token {special!r}")
        self.bpe_ranks = {pair: i for i, pair in enumerate(merges)}
        self.byte_encoder = bytes_to_unicode()
        self.context_length = context_length
        self.sot_id = self.encoder[SOT_TOKEN]
        self.eot_id = self.encoder[EOT_TOKEN]
        self._bpe_cache: dict[str, list[str]] = {}

    @classmethod
    def from_files(cls, vocab_path, merges_path, context_length: int = 77):
        try:
            with open(vocab_path, "r", encoding="utf-8") as fh:
                vocab = json.load(fh)
        except OSError as exc:
            raise TokenizerError(f"cannot load vocab file: {exc}") from None
        merges: list[tuple[str, str]] = []
        try:
            with open(merges_path, "r", encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if not line or line.startswith("#"):
                        continue
                    a, b = line.split()
                    merges.append((a, b))
        except OSError as exc:
            raise TokenizerError(f"cannot load merges file: {exc}") from None
        return cls(vocab, merges, context_length)

    def _bpe(self, token: str) -> list[str]:
        if token in self._bpe_cache:
            return self._bpe_cache[token]
        word = tuple(token[:-1]) + (token[-1] + "</w>",)
        pairs = _get_pairs(word)
        while pairs:
            best = min(pairs, key=lambda p: self.bpe_ranks.get(p, float("inf")))
            if best not in self.bpe_ranks:
                break
            first, second = best
            merged: list[str] = []
            i = 0
            while i < len(word):
                if (word[i] == first and i + 1 < len(word)
                        and word[i + 1] == second):
                    merged.append(first + second)
                    i += 2
                else:
                    merged.append(word[i])
                    i += 1
            word = tuple(merged)
            if len(word) == 1:
                break
            pairs = _get_pairs(word)
        result = list(word)
        self._bpe_cache[token] = result
        return result

    def encode(self, text: str) -> list[int]:
        """Raw BPE ids without start/end markers or padding."""
        text = re.sub(r"\s+", " ", text).strip().lower()
        ids: list[int] = []
        for token in _PRETOKEN_PATTERN.findall(text):
            token = "".join(self.byte_encoder[b] for b in token.encode("utf-8"))
            for piece in self._bpe(token):
                try:
                    ids.append(self.encoder[piece])
                except KeyError:
                    raise TokenizerError(
                        f"BPE piece {piece!r} not in vocabulary"
                    ) from None
        return ids

    def tokenize(self, caption: str) -> TokenSequence:
        """Fixed-length sequence: [SOT, ids..., EOT, PAD...], truncated to fit."""
        body = self.encode(caption)[: self.context_length - 2]
        ids = [self.sot_id] + body + [self.eot_id]
        effective = len(ids)
        ids.extend([PAD_ID] * (self.context_length - effective))
        return TokenSequence(ids=tuple(ids), effective_length=effective)

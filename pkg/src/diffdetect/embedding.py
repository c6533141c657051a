"""Embedding records, the binary store format, fusion and corpus extraction.

Store layout (little-endian): magic "DEMB", version u16 = 1, flags u16
(bit0 = text vectors present), count u32, dim_img u32, dim_txt u32, then per
record: id_len u16, id UTF-8 bytes, image_vec f32[dim_img], and text_vec
f32[dim_txt] when bit0 is set.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .backends import StubBackend
from .clip_bpe import ClipBpeTokenizer
from .corpus import Manifest
from .preprocess import load_image, preprocess_image
from .profiles import BackboneProfile

MAGIC = b"DEMB"
VERSION = 1
FLAG_TEXT = 0x0001

MODE_IMAGE_ONLY = "image"
MODE_IMAGE_TEXT = "image_text"


class StoreError(RuntimeError):
    pass


class ExtractionError(RuntimeError):
    def __init__(self, failures: list[tuple[str, str]]):
        self.failures = failures
        detail = "; ".join(f"{sid}: {msg}" for sid, msg in failures)
        super().__init__(f"extraction failed for {len(failures)} sample(s): {detail}")


@dataclass(frozen=True)
class EmbeddingRecord:
    sample_id: str
    image_vec: np.ndarray
    text_vec: Optional[np.ndarray]
    backbone: str

    def __post_init__(self):
        if not np.all(np.isfinite(self.image_vec)):
            raise StoreError(f"record {self.sample_id!r}: non-finite image vector")
        if self.text_vec is not None and not np.all(np.isfinite(self.text_vec)):
            raise StoreError(f"record {self.sample_id!r}: non-finite text vector")


@dataclass(frozen=True)
class EmbeddingStore:
    records: tuple[EmbeddingRecord, ...]
    dim_img: int
    dim_txt: int  # 0 when no text vectors
    backbone: str = ""

    @property
    def has_text(self) -> bool:
        return self.dim_txt > 0

    def by_id(self) -> dict[str, EmbeddingRecord]:
        return {r.sample_id: r for r in self.records}

    def feature_dim(self, mode: str) -> int:
        if mode == MODE_IMAGE_TEXT:
            if not self.has_text:
                raise StoreError("store has no text vectors but mode needs them")
            return self.dim_img + self.dim_txt
        return self.dim_img

    def features_for(self, sample_id: str, mode: str,
                     index: Optional[dict] = None) -> np.ndarray:
        rec = (index or self.by_id())[sample_id]
        if mode == MODE_IMAGE_TEXT:
            return fuse(rec.image_vec, rec.text_vec)
        return rec.image_vec


def fuse(image_vec: np.ndarray, text_vec: Optional[np.ndarray]) -> np.ndarray:
    """Concatenate image features then text features into one vector."""
    if text_vec is None or len(text_vec) == 0:
        return np.asarray(image_vec, dtype=np.float32)
    return np.concatenate([
        np.asarray(image_vec, dtype=np.float32),
        np.asarray(text_vec, dtype=np.float32),
    ])


def write_store(store: EmbeddingStore, path) -> None:
    flags = FLAG_TEXT if store.has_text else 0
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<HHIII", VERSION, flags, len(store.records),
                             store.dim_img, store.dim_txt))
        for rec in store.records:
            sid = rec.sample_id.encode("utf-8")
            fh.write(struct.pack("<H", len(sid)))
            fh.write(sid)
            img = np.ascontiguousarray(rec.image_vec, dtype="<f4")
            if img.shape != (store.dim_img,):
                raise StoreError(
                    f"record {rec.sample_id!r}: image dim {img.shape} != "
                    f"{store.dim_img}")
            fh.write(img.tobytes())
            if store.has_text:
                if rec.text_vec is None:
                    raise StoreError(
                        f"record {rec.sample_id!r}: missing text vector")
                txt = np.ascontiguousarray(rec.text_vec, dtype="<f4")
                if txt.shape != (store.dim_txt,):
                    raise StoreError(
                        f"record {rec.sample_id!r}: text dim {txt.shape} != "
                        f"{store.dim_txt}")
                fh.write(txt.tobytes())
    os.replace(tmp, path)


def read_store(path, backbone: str = "") -> EmbeddingStore:
    with open(path, "rb") as fh:
        header = fh.read(4 + struct.calcsize("<HHIII"))
        if len(header) < 4 or header[:4] != MAGIC:
            raise StoreError(f"{path}: not an embedding store (bad magic)")
        version, flags, count, dim_img, dim_txt = struct.unpack(
            "<HHIII", header[4:])
        if version != VERSION:
            raise StoreError(f"{path}: unsupported store version {version}")
        has_text = bool(flags & FLAG_TEXT)
        if has_text != (dim_txt > 0):
            raise StoreError(f"{path}: text flag and dim_txt disagree")
        records = []
        for _ in range(count):
            raw = fh.read(2)
            if len(raw) < 2:
                raise StoreError(f"{path}: truncated store")
            (id_len,) = struct.unpack("<H", raw)
            sid = fh.read(id_len).decode("utf-8")
            img_bytes = fh.read(4 * dim_img)
            if len(img_bytes) < 4 * dim_img:
                raise StoreError(f"{path}: truncated store at record {sid!r}")
            image_vec = np.frombuffer(img_bytes, dtype="<f4").copy()
            text_vec = None
            if has_text:
                txt_bytes = fh.read(4 * dim_txt)
                if len(txt_bytes) < 4 * dim_txt:
                    raise StoreError(f"{path}: truncated store at record {sid!r}")
                text_vec = np.frombuffer(txt_bytes, dtype="<f4").copy()
            records.append(EmbeddingRecord(
                sample_id=sid, image_vec=image_vec, text_vec=text_vec,
                backbone=backbone))
        if fh.read(1):
            raise StoreError(f"{path}: trailing bytes after last record")
    return EmbeddingStore(records=tuple(records), dim_img=dim_img,
                          dim_txt=dim_txt, backbone=backbone)


def extract_corpus(
    manifest: Manifest,
    backend,
    profile: BackboneProfile,
    mode: str,
    out_path,
    image_root=".",
    tokenizer: Optional[ClipBpeTokenizer] = None,
    include_degenerate_captions: bool = False,
) -> EmbeddingStore:
    """Embed every manifest record in order and write one store file.

    All-or-nothing: if any sample fails, failures are reported together and
    no store file is created. Stub backends are keyed on sample ids and need
    no image files; other backends read pixels from image_root/image_path.
    """
    if mode not in (MODE_IMAGE_ONLY, MODE_IMAGE_TEXT):
        raise ValueError(f"unknown mode {mode!r}")
    want_text = mode == MODE_IMAGE_TEXT
    is_stub = isinstance(backend, StubBackend)
    if want_text and not is_stub and tokenizer is None:
        if profile.vocab_path is None or profile.merges_path is None:
            raise StoreError("image_text mode needs tokenizer data in the profile")
        tokenizer = ClipBpeTokenizer.from_files(
            profile.vocab_path, profile.merges_path, profile.context_length)

    records: list[EmbeddingRecord] = []
    failures: list[tuple[str, str]] = []
    for sample in manifest:
        try:
            if want_text and sample.degenerate_caption and not include_degenerate_captions:
                raise ValueError("degenerate (empty) caption excluded from "
                                 "image+text extraction")
            if is_stub:
                image_vec = backend.embed_sample(sample, "image")
                text_vec = backend.embed_sample(sample, "text") if want_text else None
            else:
                img = load_image(os.path.join(image_root, sample.image_path))
                image_vec = backend.embed_image(preprocess_image(img, profile))
                text_vec = None
                if want_text:
                    text_vec = backend.embed_text(tokenizer.tokenize(sample.caption))
            records.append(EmbeddingRecord(
                sample_id=sample.id, image_vec=image_vec, text_vec=text_vec,
                backbone=profile.name))
        except Exception as exc:
            failures.append((sample.id, str(exc)))
    if failures:
        raise ExtractionError(failures)
    store = EmbeddingStore(
        records=tuple(records),
        dim_img=profile.image_dim,
        dim_txt=profile.text_dim if want_text else 0,
        backbone=profile.name,
    )
    write_store(store, out_path)
    return store

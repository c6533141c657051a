"""Embedding backends: a deterministic stub for fixtures and an ONNX runner.

The stub produces unit-norm vectors keyed on (sample id, modality, seed) so
corpora can be embedded without any model weights; an optional planted bias
adds a known class-separating direction to generated samples.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .clip_bpe import TokenSequence
from .corpus import Label, SampleRecord
from .profiles import BackboneProfile


class BackendError(RuntimeError):
    pass


@dataclass(frozen=True)
class PlantedBias:
    direction: int
    magnitude: float


def _seeded_unit_vector(key: str, dim: int) -> np.ndarray:
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    rng = np.random.Generator(np.random.PCG64(int.from_bytes(digest[:8], "little")))
    v = rng.standard_normal(dim)
    return (v / np.linalg.norm(v)).astype(np.float32)


def embed_stub(
    sample: SampleRecord,
    modality: str,
    seed: int,
    dim: int,
    planted_bias: Optional[PlantedBias] = None,
) -> np.ndarray:
    """Unit-norm pseudo-embedding; stable across processes (sha256 keyed)."""
    if modality not in ("image", "text"):
        raise ValueError(f"modality must be 'image' or 'text', got {modality!r}")
    v = _seeded_unit_vector(f"{sample.id}\x00{modality}\x00{seed}", dim)
    if planted_bias is not None and sample.label is Label.GENERATED:
        v = v.astype(np.float64)
        v[planted_bias.direction] += planted_bias.magnitude
        v = (v / np.linalg.norm(v)).astype(np.float32)
    return v


class StubBackend:
    """Sample-keyed backend; needs no image files or weights."""

    def __init__(self, profile: BackboneProfile, seed: int = 0,
                 planted_bias: Optional[PlantedBias] = None,
                 bias_generators: Optional[dict[str, PlantedBias]] = None):
        self.profile = profile
        self.seed = seed
        self.planted_bias = planted_bias
        # per-generator biases override the global one (cross-method fixtures)
        self.bias_generators = bias_generators or {}

    def _bias_for(self, sample: SampleRecord) -> Optional[PlantedBias]:
        return self.bias_generators.get(sample.generator, self.planted_bias)

    def embed_sample(self, sample: SampleRecord, modality: str) -> np.ndarray:
        dim = self.profile.image_dim if modality == "image" else self.profile.text_dim
        return embed_stub(sample, modality, self.seed, dim, self._bias_for(sample))

    def embed_image(self, preprocessed: np.ndarray) -> np.ndarray:
        if preprocessed.shape != (3, self.profile.input_resolution,
                                  self.profile.input_resolution):
            raise BackendError(
                f"tensor shape {preprocessed.shape} does not match profile "
                f"resolution {self.profile.input_resolution}"
            )
        key = hashlib.sha256(
            np.ascontiguousarray(preprocessed, dtype=np.float32).tobytes()
        ).hexdigest()
        return _seeded_unit_vector(f"img\x00{key}\x00{self.seed}",
                                   self.profile.image_dim)

    def embed_text(self, tokens: TokenSequence) -> np.ndarray:
        key = ",".join(map(str, tokens.ids))
        return _seeded_unit_vector(f"txt\x00{key}\x00{self.seed}",
                                   self.profile.text_dim)


class OnnxBackend:
    """Runs serialized encoder graphs.

    Contract: image graph input "pixel_values" f32 [N,3,R,R] -> output
    "image_embeds" f32 [N,image_dim]; text graph input "input_ids" i64
    [N,context_length] -> "text_embeds" f32 [N,text_dim].
    """

    def __init__(self, profile: BackboneProfile,
                 image_graph_path=None, text_graph_path=None):
        try:
            import onnxruntime as ort
        except ImportError:
            raise BackendError(
                "onnxruntime is not installed; install diffdetect[onnx]"
            ) from None
        self.profile = profile
        self._image_session = None
        self._text_session = None
        opts = ort.SessionOptions()
        opts.intra_op_num_threads = 1  # deterministic reductions
        try:
            if image_graph_path is not None:
                self._image_session = ort.InferenceSession(
                    str(image_graph_path), sess_options=opts,
                    providers=["CPUExecutionProvider"])
            if text_graph_path is not None:
                self._text_session = ort.InferenceSession(
                    str(text_graph_path), sess_options=opts,
                    providers=["CPUExecutionProvider"])
        except Exception as exc:
            raise BackendError(f"cannot load ONNX graph: {exc}") from None

    def embed_image(self, preprocessed: np.ndarray) -> np.ndarray:
        if self._image_session is None:
            raise BackendError("no image graph loaded")
        r = self.profile.input_resolution
        if preprocessed.shape != (3, r, r):
            raise BackendError(
                f"tensor shape {preprocessed.shape} does not match [3,{r},{r}]")
        batch = preprocessed[np.newaxis].astype(np.float32)
        (out,) = self._image_session.run(["image_embeds"], {"pixel_values": batch})
        vec = np.asarray(out[0], dtype=np.float32)
        if vec.shape != (self.profile.image_dim,):
            raise BackendError(
                f"graph emitted dim {vec.shape} but profile expects "
                f"{self.profile.image_dim}")
        return vec

    def embed_text(self, tokens: TokenSequence) -> np.ndarray:
        if self._text_session is None:
            raise BackendError("no text graph loaded")
        ids = np.asarray(tokens.ids, dtype=np.int64)[np.newaxis]
        if ids.shape[1] != self.profile.context_length:
            raise BackendError("token sequence length does not match profile")
        (out,) = self._text_session.run(["text_embeds"], {"input_ids": ids})
        vec = np.asarray(out[0], dtype=np.float32)
        if vec.shape != (self.profile.text_dim,):
            raise BackendError(
                f"graph emitted dim {vec.shape} but profile expects "
                f"{self.profile.text_dim}")
        return vec

"""Image synthesizers behind the generation harness.

The diffusion synthesizer wraps a text-to-image pipeline (Stable
Diffusion or GLIDE via the `diffusers` package) when weights are
available locally. The mock synthesizer is a fully deterministic
procedural stand-in: smooth random fields keyed by (caption, seed), with
generated outputs carrying a faint high-frequency grid artifact so that
a pixel-statistics detector has a real, learnable trace to find, the
same role sampling artifacts play for actual diffusion output.
"""

from __future__ import annotations

import hashlib

import numpy as np
from PIL import Image

MOCK_GENERATOR = "mock_diffusion"
DIFFUSION_GENERATORS = ("stable_diffusion", "glide")

# released base resolutions per pipeline; the mock keeps tests cheap
DEFAULT_SIZES = {"stable_diffusion": 512, "glide": 256, MOCK_GENERATOR: 64}

ARTIFACT_AMPLITUDE = 6.0


class SynthesisError(RuntimeError):
    pass


def _rng_for(caption: str, seed: int, salt: str) -> np.random.Generator:
    digest = hashlib.sha256(
        f"{salt}|{seed}|{caption}".encode("utf-8")).digest()
    return np.random.Generator(
        np.random.PCG64(int.from_bytes(digest[:8], "little")))


def _smooth_field(rng: np.random.Generator, size: int) -> np.ndarray:
    """Low-resolution noise upsampled bicubically: a photo-like base."""
    coarse = rng.uniform(30.0, 225.0, size=(4, 4, 3))
    img = Image.fromarray(coarse.astype(np.uint8), mode="RGB")
    img = img.resize((size, size), Image.Resampling.BICUBIC)
    return np.asarray(img, dtype=np.float64)

def _grid_artifact(size: int) -> np.ndarray:
    """Pixel-level checkerboard: every adjacent pair flips by 2x amplitude."""
    yy, xx = np.mgrid[0:size, 0:size]
    sign = np.where((xx + yy) % 2 == 0, 1.0, -1.0)
    return sign[:, :, None] * ARTIFACT_AMPLITUDE


def mock_generated_image(caption: str, seed: int, size: int,
                         generator: str = MOCK_GENERATOR) -> Image.Image:
    rng = _rng_for(caption, seed, salt=generator)
    pixels = _smooth_field(rng, size) + _grid_artifact(size)
    return Image.fromarray(np.clip(pixels, 0, 255).astype(np.uint8), "RGB")


def mock_real_image(caption: str, seed: int, size: int) -> Image.Image:
    """Artifact-free counterpart, for building demo corpora."""
    rng = _rng_for(caption, seed, salt="real")
    pixels = _smooth_field(rng, size)
    return Image.fromarray(np.clip(pixels, 0, 255).astype(np.uint8), "RGB")


class MockSynthesizer:
    """Deterministic procedural generator used in tests and demos."""

    def __init__(self, generator: str = MOCK_GENERATOR):
        self.generator = generator

    def __call__(self, caption: str, seed: int, size: int) -> Image.Image:
        return mock_generated_image(caption, seed, size, self.generator)


class DiffusersSynthesizer:
    """Text-to-image via a locally available diffusers pipeline."""

    def __init__(self, generator: str, steps: int = 50,
                 weights_path: str | None = None):
        if generator not in DIFFUSION_GENERATORS:
            raise SynthesisError(f"unknown diffusion generator {generator!r}")
        try:
            import diffusers  # noqa: F401
            import torch  # noqa: F401
        except ImportError as exc:
            raise SynthesisError(
                f"diffusion backend needs torch+diffusers: {exc}") from None
        from diffusers import DiffusionPipeline
        import torch
        source = weights_path or {
            "stable_diffusion": "CompVis/stable-diffusion-v1-4",
            "glide": "fusing/glide-base",
        }[generator]
        self.generator = generator
        self.steps = steps
        try:
            self.pipe = DiffusionPipeline.from_pretrained(source)
        except Exception as exc:
            raise SynthesisError(
                f"could not load pipeline weights from {source!r}: {exc}"
            ) from None
        self._torch = torch

    def __call__(self, caption: str, seed: int, size: int) -> Image.Image:
        g = self._torch.Generator().manual_seed(seed)
        out = self.pipe(caption, num_inference_steps=self.steps,
                        height=size, width=size, generator=g)
        return out.images[0]


def get_synthesizer(generator: str, steps: int = 50,
                    weights_path: str | None = None):
    if generator == MOCK_GENERATOR:
        return MockSynthesizer()
    if generator in DIFFUSION_GENERATORS:
        return DiffusersSynthesizer(generator, steps=steps,
                                    weights_path=weights_path)
    raise SynthesisError(f"unknown generator {generator!r}")

"""Backbone profiles: the fixed numbers a vision-language encoder commits to."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

# Preprocessing constants published with the released CLIP encoders.
CLIP_CHANNEL_MEAN = (0.48145466, 0.4578275, 0.40821073)
CLIP_CHANNEL_STD = (0.26862954, 0.26130258, 0.27577711)


@dataclass(frozen=True)
class BackboneProfile:
    name: str
    image_dim: int
    text_dim: int
    input_resolution: int = 224
    channel_mean: tuple[float, float, float] = CLIP_CHANNEL_MEAN
    channel_std: tuple[float, float, float] = CLIP_CHANNEL_STD
    context_length: int = 77
    vocab_path: Optional[str] = None
    merges_path: Optional[str] = None

    def __post_init__(self):
        if self.image_dim <= 0 or self.text_dim <= 0:
            raise ValueError("image_dim and text_dim must be positive")
        if self.input_resolution <= 0:
            raise ValueError("input_resolution must be positive")
        if self.context_length < 2:
            raise ValueError("context_length must leave room for start/end markers")
        if any(s <= 0 for s in self.channel_std):
            raise ValueError("channel_std components must be positive")


DEFAULT_PROFILES = {
    "clip-vit": BackboneProfile(name="clip-vit", image_dim=512, text_dim=512),
    "clip-rn50": BackboneProfile(name="clip-rn50", image_dim=1024, text_dim=1024),
    "stub": BackboneProfile(name="stub", image_dim=512, text_dim=512),
}


def get_profile(name: str, **overrides) -> BackboneProfile:
    try:
        profile = DEFAULT_PROFILES[name]
    except KeyError:
        raise KeyError(f"unknown backbone profile {name!r}; "
                       f"known: {sorted(DEFAULT_PROFILES)}") from None
    return replace(profile, **overrides) if overrides else profile

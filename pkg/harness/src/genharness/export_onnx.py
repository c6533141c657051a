"""Export CLIP-style encoders to ONNX graphs for the detector's backend.

The detector's ONNX contract: the image graph takes "pixel_values"
[N, 3, R, R] and emits "image_embeds" [N, dim]; the text graph takes
"input_ids" [N, 77] and emits "text_embeds" [N, dim]. Export runs the
native torch encoders on three fixture inputs, writes those reference
embeddings next to the graphs, and verifies graph output against the
native output within 1e-4 when onnxruntime is available.

Everything heavy is imported lazily; a missing dependency surfaces as
ExportError with the package name, not an ImportError mid-flight.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

BACKBONES = {
    "clip-vit": {"hf_name": "openai/clip-vit-base-patch32",
                 "dim": 512, "resolution": 224},
    # no hub checkpoint ships RN50 in CLIPModel format; pass --weights
    "clip-rn50": {"hf_name": None, "dim": 1024, "resolution": 224},
}
CONTEXT_LENGTH = 77
VERIFY_TOLERANCE = 1e-4
N_FIXTURES = 3


class ExportError(RuntimeError):
    pass


@dataclass(frozen=True)
class ExportResult:
    image_graph: str
    text_graph: str
    fixtures_path: str
    dim: int
    verified: bool  # False when onnxruntime was unavailable


def _require(module: str):
    try:
        return __import__(module)
    except ImportError:
        raise ExportError(f"{module} is not installed; install the "
                          "'export' extra to use export-onnx") from None


def _load_model(backbone: str, weights_path: str | None):
    if backbone not in BACKBONES:
        raise ExportError(f"unknown backbone {backbone!r}")
    _require("torch")
    transformers = _require("transformers")
    source = weights_path or BACKBONES[backbone]["hf_name"]
    if source is None:
        raise ExportError(f"{backbone}: no default checkpoint, pass a local "
                          "weights path")
    try:
        model = transformers.CLIPModel.from_pretrained(source)
    except Exception as exc:
        raise ExportError(
            f"could not load encoder weights from {source!r}: {exc}") from None
    return model.eval()


def _wrap_heads(model):
    import torch

    class ImageHead(torch.nn.Module):
        def __init__(self, clip):
            super().__init__()
            self.clip = clip

        def forward(self, pixel_values):
            return self.clip.get_image_features(pixel_values=pixel_values)

    class TextHead(torch.nn.Module):
        def __init__(self, clip):
            super().__init__()
            self.clip = clip

        def forward(self, input_ids):
            return self.clip.get_text_features(input_ids=input_ids)

    return ImageHead(model), TextHead(model)


def _fixture_inputs(resolution: int, vocab_size: int):
    import torch
    g = torch.Generator().manual_seed(0)
    pixel_values = torch.rand(
        (N_FIXTURES, 3, resolution, resolution), generator=g)
    input_ids = torch.randint(
        1, vocab_size, (N_FIXTURES, CONTEXT_LENGTH), generator=g)
    input_ids[:, 0] = vocab_size - 2   # start token by CLIP convention
    input_ids[:, -1] = vocab_size - 1  # end token
    return pixel_values, input_ids


def _export_graph(module, example, path, input_name, output_name):
    torch = _require("torch")
    _require("onnx")
    try:
        torch.onnx.export(
            module, (example,), path,
            input_names=[input_name], output_names=[output_name],
            dynamic_axes={input_name: {0: "batch"},
                          output_name: {0: "batch"}},
            dynamo=False)
    except Exception as exc:
        raise ExportError(f"onnx export failed for {path}: {exc}") from None


def _verify_graph(path, input_name, example, reference) -> None:
    ort = _require("onnxruntime")
    session = ort.InferenceSession(path, providers=["CPUExecutionProvider"])
    (out,) = session.run(None, {input_name: example})
    diff = float(np.max(np.abs(out - reference)))
    if diff > VERIFY_TOLERANCE:
        raise ExportError(
            f"{path}: graph output differs from native encoder by {diff:.2e} "
            f"(tolerance {VERIFY_TOLERANCE})")


def export_onnx(backbone: str, out_dir, weights_path: str | None = None,
                verify: bool = True) -> ExportResult:
    import importlib.util
    model = _load_model(backbone, weights_path)
    torch = _require("torch")
    os.makedirs(out_dir, exist_ok=True)
    image_head, text_head = _wrap_heads(model)
    resolution = BACKBONES[backbone]["resolution"]
    vocab_size = model.config.text_config.vocab_size
    pixel_values, input_ids = _fixture_inputs(resolution, vocab_size)

    with torch.no_grad():
        image_ref = image_head(pixel_values).numpy()
        text_ref = text_head(input_ids).numpy()

    image_graph = os.path.join(out_dir, f"{backbone}-image.onnx")
    text_graph = os.path.join(out_dir, f"{backbone}-text.onnx")
    _export_graph(image_head, pixel_values, image_graph,
                  "pixel_values", "image_embeds")
    _export_graph(text_head, input_ids, text_graph,
                  "input_ids", "text_embeds")

    fixtures_path = os.path.join(out_dir, f"{backbone}-fixtures.json")
    with open(fixtures_path, "w", encoding="utf-8") as fh:
        json.dump({
            "backbone": backbone,
            "tolerance": VERIFY_TOLERANCE,
            "image_embeds": image_ref.tolist(),
            "text_embeds": text_ref.tolist(),
        }, fh)

    verified = False
    if verify:
        if importlib.util.find_spec("onnxruntime") is None:
            raise ExportError("onnxruntime is not installed; rerun with "
                              "verification disabled to export anyway")
        _verify_graph(image_graph, "pixel_values",
                      pixel_values.numpy(), image_ref)
        _verify_graph(text_graph, "input_ids", input_ids.numpy(), text_ref)
        verified = True
    return ExportResult(image_graph=image_graph, text_graph=text_graph,
                        fixtures_path=fixtures_path,
                        dim=int(image_ref.shape[1]), verified=verified)

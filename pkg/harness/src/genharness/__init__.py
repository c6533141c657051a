"""Corpus-side tooling for the diffdetect pipeline.

Two jobs live here, deliberately outside the detector package: producing
the generated half of a corpus from real-image captions (plus ONNX export
of encoder backbones), and annotating captions with the linguistic
features the detector's analysis stage consumes. Both talk to the
detector only through its file contracts: manifest JSONL, annotations
JSONL, and the DEMB embedding store.
"""

__version__ = "0.1.0"

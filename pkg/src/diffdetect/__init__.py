"""Toolkit for detecting text-to-image diffusion outputs from vision-language embeddings."""

__version__ = "0.1.0"

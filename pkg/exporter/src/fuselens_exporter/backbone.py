"""Frozen vision-language backbones.

A backbone exposes three operations: encode an image file, encode a text
string, and encode a pre-embedded token sequence (the prompt-tuning path).
All weights are fixed; encoding the same input always yields the same
vector.

Two families are available:

- ``toy-<dim>``: a self-contained deterministic backbone (fixed random
  projections, hash-derived token embeddings). It has no pretrained
  knowledge but is frozen, fast, and reproducible, which is what the
  export pipeline and its tests need.
- ``hf-clip:<model-id>``: a real CLIP checkpoint through `transformers`.
  Requires torch, transformers, and downloadable (or cached) weights.
"""

from __future__ import annotations

import hashlib
import re
from pathlib import Path

import numpy as np

from .errors import BackboneError

_TOY_PATCH = 16  # images are resampled to _TOY_PATCH x _TOY_PATCH RGB


def _seeded(*parts: str) -> np.random.Generator:
    digest = hashlib.sha256("\x1f".join(parts).encode("utf-8")).digest()
    return np.random.default_rng(int.from_bytes(digest[:8], "little"))


class ToyVisionLanguageBackbone:
    """Deterministic stand-in for a frozen contrastive VLM.

    Images are decoded to RGB, resampled to a small fixed patch, flattened
    with a constant bias feature, and passed through a fixed Gaussian
    projection. Tokens map to fixed Gaussian vectors derived from a content
    hash; a token sequence is mean-pooled and projected. The bias feature
    keeps image vectors away from zero norm.
    """

    def __init__(self, dim: int = 64, seed_tag: str = "toy-vlm-v1") -> None:
        if dim < 2:
            raise BackboneError("backbone dimension must be >= 2")
        self.dim = dim
        self.token_dim = dim
        self.temperature = 0.01
        self.name = f"toy-{dim}"
        self._seed_tag = seed_tag
        flat = 3 * _TOY_PATCH * _TOY_PATCH + 1
        self._image_proj = _seeded(seed_tag, "image-proj", str(dim)).normal(
            size=(dim, flat)
        ) / np.sqrt(flat)
        self._text_proj = _seeded(seed_tag, "text-proj", str(dim)).normal(
            size=(dim, self.token_dim)
        ) / np.sqrt(self.token_dim)

    def encode_image(self, path: str | Path) -> np.ndarray:
        from PIL import Image

        with Image.open(path) as img:
            rgb = img.convert("RGB").resize(
                (_TOY_PATCH, _TOY_PATCH), Image.Resampling.BILINEAR
            )
        flat = np.asarray(rgb, dtype=np.float64).reshape(-1) / 255.0 - 0.5
        flat = np.concatenate([flat, [1.0]])
        return self._image_proj @ flat

    def token_embeddings(self, text: str) -> np.ndarray:
        tokens = self.tokenize(text)
        if not tokens:
            raise BackboneError(f"text {text!r} has no tokens")
        rows = [
            _seeded(self._seed_tag, "token", t).normal(size=self.token_dim)
            for t in tokens
        ]
        return np.vstack(rows)

    def encode_token_sequence(self, token_rows: np.ndarray) -> np.ndarray:
        rows = np.asarray(token_rows, dtype=np.float64)
        if rows.ndim != 2 or rows.shape[1] != self.token_dim:
            raise BackboneError(
                f"token sequence width {rows.shape} does not match the "
                f"backbone token width {self.token_dim}"
            )
        if rows.shape[0] == 0:
            raise BackboneError("token sequence is empty")
        return self._text_proj @ rows.mean(axis=0)

    def encode_text(self, text: str) -> np.ndarray:
        return self.encode_token_sequence(self.token_embeddings(text))

    @staticmethod
    def tokenize(text: str) -> list[str]:
        return re.findall(r"[a-z0-9]+", text.lower())


class HFClipBackbone:
    """A frozen CLIP checkpoint via transformers; weights must be local or
    downloadable. Prompt-tuning contexts are not supported through this
    adapter (it exposes no token-embedding interface)."""

    def __init__(self, model_id: str) -> None:
        try:
            import torch
            from transformers import CLIPModel, CLIPProcessor
        except ImportError as exc:
            raise BackboneError(
                "hf-clip backbones need torch and transformers installed"
            ) from exc
        try:
            self._model = CLIPModel.from_pretrained(model_id)
            self._processor = CLIPProcessor.from_pretrained(model_id)
        except Exception as exc:
            raise BackboneError(f"could not load CLIP model {model_id!r}: {exc}") from exc
        self._model.eval()
        self._torch = torch
        self.name = f"hf-clip:{model_id}"
        self.dim = int(self._model.config.projection_dim)
        self.temperature = float(1.0 / self._model.logit_scale.exp().item())

    def encode_image(self, path: str | Path) -> np.ndarray:
        from PIL import Image

        with Image.open(path) as img:
            inputs = self._processor(images=img.convert("RGB"), return_tensors="pt")
        with self._torch.no_grad():
            features = self._model.get_image_features(**inputs)
        return features[0].numpy().astype(np.float64)

    def encode_text(self, text: str) -> np.ndarray:
        inputs = self._processor(text=[text], return_tensors="pt", padding=True)
        with self._torch.no_grad():
            features = self._model.get_text_features(**inputs)
        return features[0].numpy().astype(np.float64)


def load_backbone(identifier: str):
    """Resolve a backbone identifier: ``toy-<dim>`` or ``hf-clip:<model>``."""
    m = re.fullmatch(r"toy-(\d+)", identifier)
    if m:
        return ToyVisionLanguageBackbone(dim=int(m.group(1)))
    if identifier.startswith("hf-clip:"):
        return HFClipBackbone(identifier.split(":", 1)[1])
    raise BackboneError(
        f"unknown backbone {identifier!r} (expected toy-<dim> or hf-clip:<model>)"
    )

"""Writers for the consumer's file formats.

These implement the documented on-disk contracts directly (binary embedding
records and the JSON classifier document) so the exporter stays decoupled
from the consumer package; the consumer's readers are the compatibility
oracle in the test suite.
"""

from __future__ import annotations

import json
import os
import struct
from pathlib import Path

import numpy as np

from .errors import ExportError

MAGIC = b"FUSLENS1"
FLAG_LABELS = 0x1
FLAG_SPLITS = 0x2
_HEADER = struct.Struct("<8sIQI")

SPLIT_CODES = {"base": 0, "novel": 1, "unlabeled": 2}


def _atomic_write(path: Path, payload: bytes) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(payload)
    os.replace(tmp, path)


def write_embedding_records(
    path: str | Path,
    vectors: np.ndarray,
    labels: list[int],
    splits: list[str],
) -> None:
    """Write one labeled, split-tagged record per row of `vectors`."""
    vectors = np.asarray(vectors, dtype=np.float64)
    if vectors.ndim != 2 or vectors.shape[0] < 1:
        raise ExportError("need a non-empty (n, dim) matrix of embeddings")
    n, dim = vectors.shape
    if len(labels) != n or len(splits) != n:
        raise ExportError("labels/splits must align with the embedding rows")
    if not np.all(np.isfinite(vectors)):
        raise ExportError("embeddings contain non-finite values")
    if np.any(np.linalg.norm(vectors, axis=1) == 0.0):
        raise ExportError("refusing to export a zero-norm embedding")
    values32 = vectors.astype("<f4")
    if not np.all(np.isfinite(values32)):
        raise ExportError("an embedding value exceeds 32-bit float range")
    arr = np.empty(
        n,
        dtype=np.dtype([("values", "<f4", (dim,)), ("label", "<u4"), ("split", "u1")]),
    )
    arr["values"] = values32
    arr["label"] = np.asarray(labels, dtype="<u4")
    arr["split"] = np.asarray([SPLIT_CODES[s] for s in splits], dtype="u1")
    header = _HEADER.pack(MAGIC, dim, n, FLAG_LABELS | FLAG_SPLITS)
    _atomic_write(Path(path), header + arr.tobytes())


def _fmt17(x: float) -> str:
    return format(float(x), ".17g")


def write_classifier_document(
    path: str | Path,
    rows: np.ndarray,
    class_names: list[str],
    temperature: float,
    kind: str,
) -> None:
    """Write the JSON classifier document with value-exact floats."""
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim != 2 or rows.shape[0] != len(class_names):
        raise ExportError("one weight row per class name is required")
    if len(set(class_names)) != len(class_names):
        raise ExportError("class names contain duplicates")
    if rows.shape[0] < 2:
        raise ExportError("a classifier needs at least two classes")
    if not np.all(np.isfinite(rows)):
        raise ExportError("classifier rows contain non-finite values")
    if np.any(np.linalg.norm(rows, axis=1) == 0.0):
        raise ExportError("classifier rows must have positive norm")
    if not temperature > 0:
        raise ExportError("temperature must be positive")
    if kind not in ("zero_shot", "few_shot"):
        raise ExportError(f"unknown classifier kind {kind!r}")
    lines = [
        "{",
        '  "format_version": 1,',
        f'  "kind": {json.dumps(kind)},',
        f'  "temperature": {_fmt17(temperature)},',
        f'  "class_names": {json.dumps(list(class_names))},',
        '  "weights": [',
    ]
    last = rows.shape[0] - 1
    for i, row in enumerate(rows):
        body = ", ".join(_fmt17(v) for v in row)
        lines.append(f"    [{body}]" + ("," if i < last else ""))
    lines += ["  ]", "}", ""]
    _atomic_write(Path(path), "\n".join(lines).encode("utf-8"))

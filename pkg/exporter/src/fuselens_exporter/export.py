"""Export pipelines: embeddings, zero-shot and few-shot classifiers.

Embeddings are exported unnormalized; the consumer's cosine normalizes at
classification time. Image folders follow the one-directory-per-class
layout, and files within a class are processed in sorted order so repeated
runs are byte-identical.
"""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np

from .backbone import ToyVisionLanguageBackbone
from .errors import BackboneError, ExportError, JobError
from .formats import write_classifier_document, write_embedding_records
from .job import ExportJob

log = logging.getLogger(__name__)

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg", ".bmp", ".gif", ".webp")


def _class_dir(job: ExportJob, class_name: str) -> Path:
    d = job.dataset / class_name
    if not d.is_dir():
        raise JobError(f"dataset has no folder for class {class_name!r} ({d})")
    return d


def _image_files(class_dir: Path) -> list[Path]:
    return sorted(
        p for p in class_dir.iterdir()
        if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES
    )


def export_embeddings(job: ExportJob, backbone) -> dict[str, Path]:
    """Encode every image of both splits; one binary file per split.

    Unreadable images are skipped and counted in the log; a split with no
    encodable image at all is an error.
    """
    job.output_dir.mkdir(parents=True, exist_ok=True)
    outputs: dict[str, Path] = {}
    for split, classes in (("base", job.base_classes), ("novel", job.novel_classes)):
        vectors: list[np.ndarray] = []
        labels: list[int] = []
        skipped = 0
        for label, class_name in enumerate(classes):
            for image_path in _image_files(_class_dir(job, class_name)):
                try:
                    vectors.append(backbone.encode_image(image_path))
                except Exception:
                    skipped += 1
                    log.warning("skipping unreadable image %s", image_path)
                    continue
                labels.append(label)
        if skipped:
            log.warning("%s split: skipped %d unreadable images", split, skipped)
        if not vectors:
            raise ExportError(f"{split} split produced no embeddings")
        out = job.output_dir / f"{split}.emb"
        write_embedding_records(out, np.vstack(vectors), labels, [split] * len(labels))
        outputs[split] = out
    return outputs


def export_zeroshot_classifier(
    job: ExportJob, backbone, classes: tuple[str, ...], out_name: str
) -> Path:
    """One weight row per class from encoding the filled prompt template."""
    if not classes:
        raise ExportError("cannot export a classifier for an empty class list")
    job.output_dir.mkdir(parents=True, exist_ok=True)
    rows = np.vstack([backbone.encode_text(job.prompt(name)) for name in classes])
    out = job.output_dir / out_name
    write_classifier_document(out, rows, list(classes), backbone.temperature,
                              kind="zero_shot")
    return out


def export_fewshot_classifier(
    job: ExportJob,
    backbone,
    classes: tuple[str, ...],
    context: np.ndarray,
    out_name: str,
) -> Path:
    """Encode [learned context tokens, class-name tokens] per class.

    The context comes from an external prompt-tuning checkpoint; this
    package never trains. Only backbones with a token-embedding interface
    (the toy family) support this path.
    """
    if not classes:
        raise ExportError("cannot export a classifier for an empty class list")
    if not isinstance(backbone, ToyVisionLanguageBackbone):
        raise BackboneError(
            f"backbone {backbone.name!r} does not expose token embeddings"
        )
    context = np.asarray(context, dtype=np.float64)
    if context.ndim != 2 or context.shape[1] != backbone.token_dim:
        raise ExportError(
            f"context width {context.shape} does not match backbone token "
            f"width {backbone.token_dim}"
        )
    job.output_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for name in classes:
        class_tokens = backbone.token_embeddings(name.replace("_", " "))
        rows.append(backbone.encode_token_sequence(np.vstack([context, class_tokens])))
    out = job.output_dir / out_name
    write_classifier_document(out, np.vstack(rows), list(classes),
                              backbone.temperature, kind="few_shot")
    return out


def load_context(path: str | Path) -> np.ndarray:
    """Load a learned context tensor (.npy, shape (M, token_dim))."""
    p = Path(path)
    if not p.exists():
        raise ExportError(f"context file not found: {p}")
    try:
        context = np.load(p)
    except Exception as exc:
        raise ExportError(f"{p}: not a readable .npy file: {exc}") from exc
    if context.ndim != 2:
        raise ExportError(f"{p}: context must be a 2-D (tokens, width) array")
    return np.asarray(context, dtype=np.float64)


def run_job(job: ExportJob, backbone, context: np.ndarray | None = None) -> list[Path]:
    """Full export: embeddings, zero-shot classifiers, and (with a context)
    few-shot classifiers for both splits. Returns the written paths."""
    written = list(export_embeddings(job, backbone).values())
    written.append(export_zeroshot_classifier(
        job, backbone, job.base_classes, "zs-base.classifier.json"))
    written.append(export_zeroshot_classifier(
        job, backbone, job.novel_classes, "zs-novel.classifier.json"))
    if context is not None:
        written.append(export_fewshot_classifier(
            job, backbone, job.base_classes, context, "fs-base.classifier.json"))
        written.append(export_fewshot_classifier(
            job, backbone, job.novel_classes, context, "fs-novel.classifier.json"))
    return written

"""Evaluation protocols over labeled embedding sets.

Covers the two standard protocols (base-to-novel with disjoint label
spaces, and source-to-targets with a shared label space) plus sweeps over
the scaling factor alpha and over fixed fusion weights. Accuracies are
fractions in [0, 1]; CLI rendering converts to percentages.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .analysis import harmonic_mean
from .core import ClassifierWeights, Embedding
from .errors import InvariantError
from .fusion import FusionConfig, classify_batch


@dataclass(frozen=True, eq=False)
class EvalSet:
    """Labeled embeddings sharing one label space.

    Every sample must carry a label indexing into class_names; evaluation
    of unlabeled data is undefined.
    """

    samples: tuple[Embedding, ...]
    class_names: tuple[str, ...]

    def __post_init__(self) -> None:
        samples = tuple(self.samples)
        names = tuple(str(n) for n in self.class_names)
        if not samples:
            raise InvariantError("evaluation set has no samples")
        if len(set(names)) != len(names):
            raise InvariantError("evaluation set class names contain duplicates")
        dim = samples[0].dim
        for i, sample in enumerate(samples):
            if sample.dim != dim:
                raise InvariantError(
                    f"sample {i} has dimension {sample.dim}, expected {dim}"
                )
            if sample.label is None:
                raise InvariantError(f"sample {i} has no label")
            if sample.label >= len(names):
                raise InvariantError(
                    f"sample {i} label {sample.label} outside the {len(names)}-class "
                    "label space"
                )
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "class_names", names)

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def dim(self) -> int:
        return self.samples[0].dim

    @cached_property
    def matrix(self) -> np.ndarray:
        m = np.vstack([s.values for s in self.samples])
        m.setflags(write=False)
        return m

    @cached_property
    def labels(self) -> np.ndarray:
        arr = np.array([s.label for s in self.samples], dtype=np.int64)
        arr.setflags(write=False)
        return arr

    def sample_id(self, index: int, fallback_prefix: str = "sample") -> str:
        sid = self.samples[index].sample_id
        return sid if sid is not None else f"{fallback_prefix}:{index}"


@dataclass(frozen=True)
class TraceRow:
    sample_id: str
    fusion_weight: float
    predicted: int
    correct: bool


@dataclass(frozen=True)
class EvalReport:
    base_accuracy: float
    novel_accuracy: float
    harmonic_mean: float
    config: FusionConfig
    per_sample: tuple[TraceRow, ...] | None = None


@dataclass(frozen=True)
class DomainEvalReport:
    source_accuracy: float
    target_accuracies: tuple[float, ...]
    target_mean: float
    config: FusionConfig


@dataclass(frozen=True)
class AlphaSweepResult:
    alphas: tuple[float, ...]
    reports: tuple[EvalReport, ...]
    best_alpha: float
    best_index: int


def accuracy(predictions, labels) -> float:
    """Fraction of exact matches between two equal-length index sequences."""
    preds = np.asarray(predictions)
    labs = np.asarray(labels)
    if preds.shape != labs.shape or preds.ndim != 1:
        raise InvariantError(
            f"predictions and labels must be equal-length vectors, got "
            f"{preds.shape} vs {labs.shape}"
        )
    if preds.size == 0:
        raise InvariantError("accuracy of an empty prediction list is undefined")
    return float(np.count_nonzero(preds == labs)) / preds.size


def base_to_novel_eval(
    base: EvalSet,
    novel: EvalSet,
    fs_base: ClassifierWeights,
    zs_base: ClassifierWeights,
    fs_novel: ClassifierWeights,
    zs_novel: ClassifierWeights,
    cfg: FusionConfig,
    with_trace: bool = False,
    threads: int = 1,
) -> EvalReport:
    """Fused-classifier accuracy on disjoint base and novel label spaces.

    Each split is classified with the fused pair built over that split's
    class names; the few-shot weights for the novel split come from the
    caller (tuned contexts applied to unseen class names).
    """
    if set(base.class_names) & set(novel.class_names):
        raise InvariantError("base and novel label spaces must be disjoint")
    base_preds, base_weights = _classify_set(base, fs_base, zs_base, cfg, threads)
    novel_preds, novel_weights = _classify_set(novel, fs_novel, zs_novel, cfg, threads)
    base_acc = accuracy(base_preds, base.labels)
    novel_acc = accuracy(novel_preds, novel.labels)
    trace = None
    if with_trace:
        trace = _trace_rows(base, base_preds, base_weights, "base") + _trace_rows(
            novel, novel_preds, novel_weights, "novel"
        )
    return EvalReport(
        base_accuracy=base_acc,
        novel_accuracy=novel_acc,
        harmonic_mean=harmonic_mean(base_acc, novel_acc),
        config=cfg,
        per_sample=trace,
    )


def domain_generalization_eval(
    source: EvalSet,
    targets: list[EvalSet] | tuple[EvalSet, ...],
    fs: ClassifierWeights,
    zs: ClassifierWeights,
    cfg: FusionConfig,
    threads: int = 1,
) -> DomainEvalReport:
    """Accuracy on a source set and shifted target sets sharing one label space."""
    targets = tuple(targets)
    if not targets:
        raise InvariantError("domain evaluation needs at least one target set")
    source_preds, _ = _classify_set(source, fs, zs, cfg, threads)
    target_accs = []
    for target in targets:
        preds, _ = _classify_set(target, fs, zs, cfg, threads)
        target_accs.append(accuracy(preds, target.labels))
    return DomainEvalReport(
        source_accuracy=accuracy(source_preds, source.labels),
        target_accuracies=tuple(target_accs),
        target_mean=float(sum(target_accs)) / len(target_accs),
        config=cfg,
    )


def alpha_sweep(
    base: EvalSet,
    novel: EvalSet,
    fs_base: ClassifierWeights,
    zs_base: ClassifierWeights,
    fs_novel: ClassifierWeights,
    zs_novel: ClassifierWeights,
    cfg: FusionConfig,
    alphas: list[float] | tuple[float, ...],
    threads: int = 1,
) -> AlphaSweepResult:
    """One base-to-novel report per alpha; also picks the argmax-H alpha.

    Ties on H resolve to the earliest alpha in the list.
    """
    alphas = tuple(float(a) for a in alphas)
    if not alphas:
        raise InvariantError("alpha sweep needs at least one alpha")
    if cfg.mode != "dynamic":
        raise InvariantError("alpha sweep requires a dynamic fusion config")
    reports = tuple(
        base_to_novel_eval(
            base, novel, fs_base, zs_base, fs_novel, zs_novel,
            cfg.with_alpha(a), threads=threads,
        )
        for a in alphas
    )
    best_index = max(range(len(reports)), key=lambda i: (reports[i].harmonic_mean, -i))
    return AlphaSweepResult(
        alphas=alphas,
        reports=reports,
        best_alpha=alphas[best_index],
        best_index=best_index,
    )


def static_sweep(
    base: EvalSet,
    novel: EvalSet,
    fs_base: ClassifierWeights,
    zs_base: ClassifierWeights,
    fs_novel: ClassifierWeights,
    zs_novel: ClassifierWeights,
    fixed_weights: list[float] | tuple[float, ...],
    cfg: FusionConfig | None = None,
    threads: int = 1,
) -> tuple[EvalReport, ...]:
    """One base-to-novel report per fixed fusion weight."""
    weights = tuple(float(w) for w in fixed_weights)
    if not weights:
        raise InvariantError("static sweep needs at least one weight")
    for w in weights:
        if math.isnan(w) or not (0.0 <= w <= 1.0):
            raise InvariantError(f"static weight {w} outside [0, 1]")
    template = cfg if cfg is not None else FusionConfig()
    return tuple(
        base_to_novel_eval(
            base, novel, fs_base, zs_base, fs_novel, zs_novel,
            template.with_static_weight(w), threads=threads,
        )
        for w in weights
    )


def _classify_set(
    eset: EvalSet,
    fs: ClassifierWeights,
    zs: ClassifierWeights,
    cfg: FusionConfig,
    threads: int,
) -> tuple[np.ndarray, np.ndarray]:
    if fs.class_names != eset.class_names:
        raise InvariantError(
            "classifier label space does not match the evaluation set's class names"
        )
    preds, weights, _ = classify_batch(eset.matrix, fs, zs, cfg, threads=threads)
    return preds, weights


def _trace_rows(
    eset: EvalSet, preds: np.ndarray, weights: np.ndarray, prefix: str
) -> tuple[TraceRow, ...]:
    return tuple(
        TraceRow(
            sample_id=eset.sample_id(i, prefix),
            fusion_weight=float(weights[i]),
            predicted=int(preds[i]),
            correct=bool(preds[i] == eset.labels[i]),
        )
        for i in range(len(eset))
    )

"""Competition-based scoring and dynamic fusion of two cosine classifiers.

The fusion weight s for a sample is the sigmoid of the alpha-scaled
difference between the few-shot and zero-shot ID scores. The fused
classifier W = s*W_fs + (1-s)*W_zs is recomputed per sample; blending the
two posteriors instead of the weight matrices is supported as an alternate
target. Both classifiers of the pair may be few-shot classifiers, which
fuses two tuned models instead of a tuned and a pretrained one.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .core import (
    ClassifierKind,
    ClassifierWeights,
    Embedding,
    Posterior,
    stable_softmax,
    unit_rows,
)
from .errors import InvariantError
from .scores import EnergyNormalization, IdScore, ScoreMethod, msp_rows, score_rows


class FusionTarget(Enum):
    WEIGHTS = "weights"
    POSTERIORS = "posteriors"


class SingleClassifierRule(Enum):
    """Fusion weights taken from one classifier's MSP instead of a contest."""

    FS_MSP = "fs-msp"
    ONE_MINUS_ZS_MSP = "one-minus-zs-msp"


@dataclass(frozen=True)
class FusionWeight:
    """A per-sample convex-combination weight in [0, 1]."""

    value: float

    def __post_init__(self) -> None:
        v = float(self.value)
        if not (0.0 <= v <= 1.0):
            raise InvariantError(f"fusion weight {v} outside [0, 1]")
        object.__setattr__(self, "value", v)


@dataclass(frozen=True)
class FusionConfig:
    """Everything that determines how the two classifiers are combined.

    alpha may be math.inf, which replaces the sigmoid with a hard step:
    1 above zero, 0 below, 0.5 on an exact tie (the pointwise sigmoid
    limit). static_weight switches to a fixed weight for every sample;
    single_classifier_rule derives the weight from one classifier's MSP.
    The two overrides are mutually exclusive.
    """

    method: ScoreMethod = ScoreMethod.ENTROPY
    alpha: float = 64.0
    target: FusionTarget = FusionTarget.WEIGHTS
    static_weight: float | None = None
    single_classifier_rule: SingleClassifierRule | None = None
    energy_normalization: EnergyNormalization = EnergyNormalization.LITERAL
    prenormalize_rows: bool = False

    def __post_init__(self) -> None:
        alpha = float(self.alpha)
        if math.isnan(alpha) or alpha <= 0:
            raise InvariantError("alpha must be positive (or infinite)")
        object.__setattr__(self, "alpha", alpha)
        if self.static_weight is not None:
            s = float(self.static_weight)
            if not (0.0 <= s <= 1.0):
                raise InvariantError(f"static weight {s} outside [0, 1]")
            object.__setattr__(self, "static_weight", s)
        if self.static_weight is not None and self.single_classifier_rule is not None:
            raise InvariantError(
                "static_weight and single_classifier_rule are mutually exclusive"
            )

    @property
    def mode(self) -> str:
        if self.single_classifier_rule is not None:
            return self.single_classifier_rule.value
        if self.static_weight is not None:
            return "static"
        return "dynamic"

    def with_alpha(self, alpha: float) -> "FusionConfig":
        return replace(self, alpha=alpha)

    def with_static_weight(self, weight: float) -> "FusionConfig":
        return replace(self, static_weight=weight, single_classifier_rule=None)

    def describe(self) -> str:
        """Stable one-token summary used as the CSV config column."""
        parts = [f"method={self.method.value}"]
        if self.single_classifier_rule is not None:
            parts.append(f"rule={self.single_classifier_rule.value}")
        elif self.static_weight is not None:
            parts.append(f"static={format_weight(self.static_weight)}")
        else:
            parts.append(f"alpha={format_alpha(self.alpha)}")
        parts.append(f"target={self.target.value}")
        if self.energy_normalization is not EnergyNormalization.LITERAL:
            parts.append(f"energy={self.energy_normalization.value}")
        if self.prenormalize_rows:
            parts.append("prenormalized")
        return ";".join(parts)


def format_alpha(alpha: float) -> str:
    if math.isinf(alpha):
        return "inf"
    if alpha == int(alpha):
        return str(int(alpha))
    return repr(alpha)


def format_weight(weight: float) -> str:
    return str(int(weight)) if weight == int(weight) else repr(weight)


@dataclass(frozen=True)
class FusedPrediction:
    """Outcome of classifying one sample with the fused classifier."""

    predicted: int
    weight: FusionWeight
    posterior: Posterior


def sigmoid_rows(z: np.ndarray) -> np.ndarray:
    """Numerically stable logistic function; never exponentiates positives."""
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def heaviside_rows(diff: np.ndarray) -> np.ndarray:
    """Hard routing: 1 above zero, 0 below, 0.5 on an exact tie."""
    diff = np.asarray(diff, dtype=np.float64)
    return np.where(diff > 0, 1.0, np.where(diff < 0, 0.0, 0.5))


def competition_score(ids_fs: IdScore, ids_zs: IdScore, alpha: float) -> FusionWeight:
    """Fusion weight from the contest between the two ID scores.

    Finite alpha applies the sigmoid to alpha * (ids_fs - ids_zs); infinite
    alpha applies the hard step. Both scores must come from the same method,
    otherwise the difference would compare incomparable scales.
    """
    if ids_fs.method is not ids_zs.method:
        raise InvariantError(
            f"cannot compare {ids_fs.method.value} against {ids_zs.method.value} scores"
        )
    alpha = float(alpha)
    if math.isnan(alpha) or alpha <= 0:
        raise InvariantError("alpha must be positive (or infinite)")
    diff = ids_fs.value - ids_zs.value
    if math.isinf(alpha):
        return FusionWeight(float(heaviside_rows(np.float64(diff))))
    return FusionWeight(float(sigmoid_rows(np.float64(alpha * diff))))


def single_classifier_weight(
    x: Embedding,
    fs: ClassifierWeights,
    zs: ClassifierWeights,
    rule: SingleClassifierRule,
) -> FusionWeight:
    """Fusion weight from one classifier's maximum softmax probability."""
    _check_pair(fs, zs)
    xu = _unit_sample(x)
    if rule is SingleClassifierRule.FS_MSP:
        cos = _clipped_cosines(xu[None, :], fs)
        return FusionWeight(float(msp_rows(stable_softmax(cos / fs.temperature))[0]))
    cos = _clipped_cosines(xu[None, :], zs)
    return FusionWeight(1.0 - float(msp_rows(stable_softmax(cos / zs.temperature))[0]))


def fuse_weights(
    fs: ClassifierWeights,
    zs: ClassifierWeights,
    s: FusionWeight,
    prenormalize_rows: bool = False,
) -> ClassifierWeights:
    """Convex combination s*W_fs + (1-s)*W_zs of the raw weight matrices.

    Rows are blended unnormalized by default; the cosine at classification
    time renormalizes. With prenormalize_rows the rows are scaled to unit
    norm before blending. The result acts as the task classifier, so it is
    tagged few-shot and carries the shared temperature and class names.
    """
    _check_pair(fs, zs)
    f = unit_rows(fs.weights) if prenormalize_rows else fs.weights
    z = unit_rows(zs.weights) if prenormalize_rows else zs.weights
    blended = s.value * f + (1.0 - s.value) * z
    return ClassifierWeights(
        weights=blended,
        class_names=fs.class_names,
        temperature=fs.temperature,
        kind=ClassifierKind.FEW_SHOT,
    )


def fuse_posteriors(p_fs: Posterior, p_zs: Posterior, s: FusionWeight) -> Posterior:
    """Convex combination of two posteriors; stays on the simplex."""
    if p_fs.n_classes != p_zs.n_classes:
        raise InvariantError(
            f"posterior length mismatch: {p_fs.n_classes} vs {p_zs.n_classes}"
        )
    return Posterior(s.value * p_fs.probs + (1.0 - s.value) * p_zs.probs)


def classify_fused(
    x: Embedding,
    fs: ClassifierWeights,
    zs: ClassifierWeights,
    cfg: FusionConfig,
) -> FusedPrediction:
    """Classify one sample with the per-sample fused classifier.

    Ties in the argmax break to the lowest class index.
    """
    if x.dim != fs.dim:
        raise InvariantError(
            f"embedding dimension {x.dim} does not match classifier dimension {fs.dim}"
        )
    predictions, weights, posteriors = classify_batch(x.values[None, :], fs, zs, cfg)
    return FusedPrediction(
        predicted=int(predictions[0]),
        weight=FusionWeight(float(weights[0])),
        posterior=Posterior(posteriors[0]),
    )


def fusion_weights_batch(
    xs: np.ndarray,
    fs: ClassifierWeights,
    zs: ClassifierWeights,
    cfg: FusionConfig,
) -> np.ndarray:
    """Per-sample fusion weights for a (n, D) batch."""
    _check_pair(fs, zs)
    xu = unit_rows(_as_batch(xs, fs.dim))
    return _weights_for(xu, fs, zs, cfg)


def classify_batch(
    xs: np.ndarray,
    fs: ClassifierWeights,
    zs: ClassifierWeights,
    cfg: FusionConfig,
    threads: int = 1,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Classify a (n, D) batch of embeddings with the fused classifier.

    Returns (predictions, fusion weights, fused posteriors). The blended
    cosine is evaluated algebraically, dot products are linear in the
    blended row and only the row norm needs per-sample correction, so the
    batch reduces to a handful of matrix products. Samples are independent;
    with threads > 1 the batch is split into contiguous chunks whose results
    are reassembled in order, so the output never depends on scheduling.
    """
    _check_pair(fs, zs)
    x = _as_batch(xs, fs.dim)
    if threads > 1 and x.shape[0] >= 2 * threads:
        chunks = np.array_split(np.arange(x.shape[0]), threads)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda idx: _classify_chunk(x[idx], fs, zs, cfg), chunks))
        return (
            np.concatenate([p[0] for p in parts]),
            np.concatenate([p[1] for p in parts]),
            np.concatenate([p[2] for p in parts]),
        )
    return _classify_chunk(x, fs, zs, cfg)


def _classify_chunk(
    x: np.ndarray,
    fs: ClassifierWeights,
    zs: ClassifierWeights,
    cfg: FusionConfig,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    xu = unit_rows(x)
    s = _weights_for(xu, fs, zs, cfg)
    tau = fs.temperature
    if cfg.target is FusionTarget.POSTERIORS:
        p_fs = stable_softmax(_clipped_cosines(xu, fs) / tau)
        p_zs = stable_softmax(_clipped_cosines(xu, zs) / tau)
        fused = s[:, None] * p_fs + (1.0 - s)[:, None] * p_zs
    else:
        cos = _fused_cosines(xu, fs, zs, s, cfg.prenormalize_rows)
        fused = stable_softmax(cos / tau)
    # np.argmax returns the first maximum: ties break to the lowest index.
    return np.argmax(fused, axis=1), s, fused


def _weights_for(
    xu: np.ndarray,
    fs: ClassifierWeights,
    zs: ClassifierWeights,
    cfg: FusionConfig,
) -> np.ndarray:
    tau = fs.temperature
    if cfg.single_classifier_rule is SingleClassifierRule.FS_MSP:
        return msp_rows(stable_softmax(_clipped_cosines(xu, fs) / tau))
    if cfg.single_classifier_rule is SingleClassifierRule.ONE_MINUS_ZS_MSP:
        return 1.0 - msp_rows(stable_softmax(_clipped_cosines(xu, zs) / tau))
    if cfg.static_weight is not None:
        return np.full(xu.shape[0], cfg.static_weight)
    ids_fs = score_rows(_clipped_cosines(xu, fs), tau, cfg.method, cfg.energy_normalization)
    ids_zs = score_rows(_clipped_cosines(xu, zs), tau, cfg.method, cfg.energy_normalization)
    diff = ids_fs - ids_zs
    if math.isinf(cfg.alpha):
        return heaviside_rows(diff)
    return sigmoid_rows(cfg.alpha * diff)


def _fused_cosines(
    xu: np.ndarray,
    fs: ClassifierWeights,
    zs: ClassifierWeights,
    s: np.ndarray,
    prenormalize_rows: bool,
) -> np.ndarray:
    f = unit_rows(fs.weights) if prenormalize_rows else fs.weights
    z = unit_rows(zs.weights) if prenormalize_rows else zs.weights
    dots_f = xu @ f.T
    dots_z = xu @ z.T
    sf = s[:, None]
    numer = sf * dots_f + (1.0 - sf) * dots_z
    f_sq = np.sum(f * f, axis=1)
    z_sq = np.sum(z * z, axis=1)
    fz = np.sum(f * z, axis=1)
    norm_sq = sf**2 * f_sq + (1.0 - sf) ** 2 * z_sq + 2.0 * sf * (1.0 - sf) * fz
    if np.any(norm_sq <= 0.0):
        raise InvariantError("fused classifier has a zero-norm weight row")
    return np.clip(numer / np.sqrt(norm_sq), -1.0, 1.0)


def _clipped_cosines(xu: np.ndarray, classifier: ClassifierWeights) -> np.ndarray:
    return np.clip(xu @ unit_rows(classifier.weights).T, -1.0, 1.0)


def _unit_sample(x: Embedding) -> np.ndarray:
    return x.values / np.linalg.norm(x.values)


def _as_batch(xs: np.ndarray, dim: int) -> np.ndarray:
    x = np.asarray(xs, dtype=np.float64)
    if x.ndim != 2:
        raise InvariantError("batch input must be a (n, D) matrix")
    if x.shape[1] != dim:
        raise InvariantError(
            f"embedding dimension {x.shape[1]} does not match classifier dimension {dim}"
        )
    if not np.all(np.isfinite(x)):
        raise InvariantError("batch contains non-finite values")
    return x


def _check_pair(fs: ClassifierWeights, zs: ClassifierWeights) -> None:
    if fs.weights.shape != zs.weights.shape:
        raise InvariantError(
            f"classifier shape mismatch: {fs.weights.shape} vs {zs.weights.shape}"
        )
    if fs.class_names != zs.class_names:
        raise InvariantError("classifier class names differ or are ordered differently")
    if fs.temperature != zs.temperature:
        raise InvariantError(
            f"temperature mismatch: {fs.temperature} vs {zs.temperature}; scores "
            "from different scales are not comparable"
        )

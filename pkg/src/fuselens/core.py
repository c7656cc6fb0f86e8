"""Domain types and the cosine-similarity/temperature classifier math.

All types are immutable after construction (their numpy buffers are set
read-only), so instances are safe to share across threads. All floating
point work is done in float64; 32-bit storage formats are widened on load.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import InvariantError

# Applied when a classifier file omits its temperature; chosen to match the
# ~100x logit scale conventional for contrastively pretrained encoders.
DEFAULT_TEMPERATURE = 0.01

POSTERIOR_SUM_TOL = 1e-9


class Split(Enum):
    BASE = "base"
    NOVEL = "novel"
    UNLABELED = "unlabeled"


class ClassifierKind(Enum):
    ZERO_SHOT = "zero_shot"
    FEW_SHOT = "few_shot"


def _frozen_array(values, dtype=np.float64) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Embedding:
    """One encoded sample: a D-dimensional feature vector plus metadata.

    Invariants: D >= 1, all values finite, Euclidean norm strictly positive.
    """

    values: np.ndarray
    sample_id: str | None = None
    label: int | None = None
    split: Split | None = None

    def __post_init__(self) -> None:
        values = _frozen_array(self.values)
        if values.ndim != 1 or values.size < 1:
            raise InvariantError("embedding values must form a non-empty 1-D vector")
        if not np.all(np.isfinite(values)):
            raise InvariantError("embedding contains non-finite values")
        if float(np.linalg.norm(values)) == 0.0:
            raise InvariantError("embedding has zero Euclidean norm")
        if self.label is not None and int(self.label) < 0:
            raise InvariantError("label index must be non-negative")
        object.__setattr__(self, "values", values)
        if self.label is not None:
            object.__setattr__(self, "label", int(self.label))

    @property
    def dim(self) -> int:
        return self.values.size


@dataclass(frozen=True, eq=False)
class ClassifierWeights:
    """An N x D weight matrix whose rows are per-class weight vectors.

    Rows are stored raw (not unit-normalized); the cosine in `logits`
    normalizes at use. Temperature divides cosine similarities into logits.
    """

    weights: np.ndarray
    class_names: tuple[str, ...]
    temperature: float = DEFAULT_TEMPERATURE
    kind: ClassifierKind = ClassifierKind.ZERO_SHOT

    def __post_init__(self) -> None:
        weights = _frozen_array(self.weights)
        names = tuple(str(n) for n in self.class_names)
        if weights.ndim != 2:
            raise InvariantError("classifier weights must be an N x D matrix")
        if weights.shape[0] < 2:
            raise InvariantError("classifier needs at least two classes")
        if weights.shape[1] < 1:
            raise InvariantError("classifier rows must have dimension >= 1")
        if not np.all(np.isfinite(weights)):
            raise InvariantError("classifier weights contain non-finite values")
        if np.any(np.linalg.norm(weights, axis=1) == 0.0):
            raise InvariantError("classifier has a zero-norm weight row")
        if len(names) != weights.shape[0]:
            raise InvariantError(
                f"{len(names)} class names for {weights.shape[0]} weight rows"
            )
        if len(set(names)) != len(names):
            raise InvariantError("class names contain duplicates")
        tau = float(self.temperature)
        if not tau > 0:
            raise InvariantError("temperature must be strictly positive")
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "class_names", names)
        object.__setattr__(self, "temperature", tau)

    @property
    def n_classes(self) -> int:
        return self.weights.shape[0]

    @property
    def dim(self) -> int:
        return self.weights.shape[1]


@dataclass(frozen=True, eq=False)
class LogitVector:
    """Per-class logits: cosine similarity divided by temperature."""

    values: np.ndarray

    def __post_init__(self) -> None:
        values = _frozen_array(self.values)
        if values.ndim != 1 or values.size < 1:
            raise InvariantError("logit vector must be a non-empty 1-D vector")
        if not np.all(np.isfinite(values)):
            raise InvariantError("logit vector contains non-finite values")
        object.__setattr__(self, "values", values)

    @property
    def n_classes(self) -> int:
        return self.values.size


@dataclass(frozen=True, eq=False)
class Posterior:
    """A probability vector over classes; entries >= 0 and sum to 1."""

    probs: np.ndarray

    def __post_init__(self) -> None:
        probs = _frozen_array(self.probs)
        if probs.ndim != 1 or probs.size < 1:
            raise InvariantError("posterior must be a non-empty 1-D vector")
        if np.any(probs < 0.0) or not np.all(np.isfinite(probs)):
            raise InvariantError("posterior entries must be finite and non-negative")
        if abs(float(probs.sum()) - 1.0) > POSTERIOR_SUM_TOL:
            raise InvariantError("posterior entries must sum to 1")
        object.__setattr__(self, "probs", probs)

    @property
    def n_classes(self) -> int:
        return self.probs.size


def cosine_similarity(a, b) -> float:
    """Cosine similarity of two equal-dimension vectors, clamped to [-1, 1].

    The clamp absorbs floating-point overshoot so downstream consumers can
    rely on the analytic range.
    """
    av = np.asarray(a, dtype=np.float64)
    bv = np.asarray(b, dtype=np.float64)
    if av.ndim != 1 or bv.ndim != 1 or av.shape != bv.shape:
        raise InvariantError(f"dimension mismatch: {av.shape} vs {bv.shape}")
    na = float(np.linalg.norm(av))
    nb = float(np.linalg.norm(bv))
    if na == 0.0 or nb == 0.0:
        raise InvariantError("cosine similarity of a zero-norm vector is undefined")
    return float(np.clip(float(av @ bv) / (na * nb), -1.0, 1.0))


def unit_rows(matrix: np.ndarray) -> np.ndarray:
    """Return a copy of `matrix` with every row scaled to unit norm."""
    m = np.asarray(matrix, dtype=np.float64)
    norms = np.linalg.norm(m, axis=-1, keepdims=True)
    if np.any(norms == 0.0):
        raise InvariantError("cannot normalize a zero-norm row")
    return m / norms


def cosine_rows(x: np.ndarray, rows: np.ndarray) -> np.ndarray:
    """Cosine similarity of one vector against every matrix row, clamped."""
    xv = np.asarray(x, dtype=np.float64)
    xn = float(np.linalg.norm(xv))
    if xn == 0.0:
        raise InvariantError("cosine similarity of a zero-norm vector is undefined")
    sims = (rows @ xv) / (np.linalg.norm(rows, axis=1) * xn)
    return np.clip(sims, -1.0, 1.0)


def logits(x: Embedding, classifier: ClassifierWeights) -> LogitVector:
    """Per-class logits for one sample: cosine(x, row_i) / temperature."""
    if x.dim != classifier.dim:
        raise InvariantError(
            f"embedding dimension {x.dim} does not match classifier dimension "
            f"{classifier.dim}"
        )
    return LogitVector(cosine_rows(x.values, classifier.weights) / classifier.temperature)


def stable_softmax(values: np.ndarray, axis: int = -1) -> np.ndarray:
    """Softmax with max subtraction; rows sum to 1 without overflow."""
    v = np.asarray(values, dtype=np.float64)
    shifted = v - np.max(v, axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=axis, keepdims=True)


def softmax_posterior(o: LogitVector) -> Posterior:
    """Posterior probabilities from logits via numerically stable softmax."""
    return Posterior(stable_softmax(o.values))

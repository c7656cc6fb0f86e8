"""In-distribution scoring functions.

Each method maps one classifier's outputs on one sample to a scalar where
larger means the sample looks more like the distribution the classifier was
tuned for. Four methods are provided: maximum softmax probability, maximum
logit, negative free energy, and negative normalized entropy.

The row-wise kernels (`*_rows`) operate on (n, N) batches and are the single
source of truth; the scalar operations wrap them on one-row inputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .core import ClassifierKind, ClassifierWeights, Embedding, LogitVector, Posterior
from .core import logits as compute_logits
from .core import softmax_posterior, stable_softmax
from .errors import InvariantError

# Below this, p*log(p) is taken as its limit 0 rather than evaluated.
_PLOGP_CUTOFF = 1e-300


class ScoreMethod(Enum):
    MSP = "msp"
    MAX_LOGIT = "maxlogit"
    ENERGY = "energy"
    ENTROPY = "entropy"

    @classmethod
    def from_name(cls, name: str) -> "ScoreMethod":
        """Resolve a CLI-style method name, case-insensitively."""
        key = name.strip().lower()
        for method in cls:
            if method.value == key:
                return method
        raise InvariantError(f"unknown score method {name!r} (expected one of "
                             f"{', '.join(m.value for m in cls)})")


class EnergyNormalization(Enum):
    """How the free-energy score is scaled.

    LITERAL divides by (log N + 1/tau), which lands the score in roughly
    [-tau, tau]. UNIT_RANGE divides by (tau*log N + 1) instead, stretching
    the range to roughly [-1, 1]. LITERAL is the default; the scaling gap is
    absorbed by the competition score's alpha factor.
    """

    LITERAL = "literal"
    UNIT_RANGE = "unit-range"


@dataclass(frozen=True)
class IdScore:
    """A scalar ID-ness value; larger means more in-distribution.

    `classifier_kind` is None when the score was computed from bare
    logits/posteriors rather than through `id_score`.
    """

    value: float
    method: ScoreMethod
    classifier_kind: ClassifierKind | None = None


def msp_rows(posteriors: np.ndarray) -> np.ndarray:
    """Maximum softmax probability per row; in [1/N, 1]."""
    return np.max(posteriors, axis=-1)


def maxlogit_rows(logit_rows: np.ndarray, tau: float) -> np.ndarray:
    """tau * max logit per row; equals the maximum cosine, so in [-1, 1].

    Clamped because dividing and re-multiplying by tau can overshoot the
    cosine bound by an ulp.
    """
    return np.clip(tau * np.max(logit_rows, axis=-1), -1.0, 1.0)


def energy_rows(
    logit_rows: np.ndarray,
    tau: float,
    normalization: EnergyNormalization = EnergyNormalization.LITERAL,
) -> np.ndarray:
    """Scaled negative free energy per row: tau * logsumexp(logits) / norm."""
    n_classes = logit_rows.shape[-1]
    m = np.max(logit_rows, axis=-1)
    lse = m + np.log(np.sum(np.exp(logit_rows - m[..., None]), axis=-1))
    if normalization is EnergyNormalization.UNIT_RANGE:
        scale = tau * np.log(n_classes) + 1.0
    else:
        scale = np.log(n_classes) + 1.0 / tau
    return tau * lse / scale


def entropy_rows(posteriors: np.ndarray) -> np.ndarray:
    """Negative entropy normalized by log N, per row; in [-1, 0].

    Zero probabilities contribute 0 via the x*log(x) -> 0 limit. The result
    is clamped because a numerically uniform posterior can undershoot -1 by
    an ulp.
    """
    n_classes = posteriors.shape[-1]
    safe = np.where(posteriors > _PLOGP_CUTOFF, posteriors, 1.0)
    plogp = np.where(posteriors > _PLOGP_CUTOFF, posteriors * np.log(safe), 0.0)
    return np.clip(np.sum(plogp, axis=-1) / np.log(n_classes), -1.0, 0.0)


def msp_score(p: Posterior, classifier_kind: ClassifierKind | None = None) -> IdScore:
    """Maximum softmax probability of one posterior."""
    return IdScore(float(msp_rows(p.probs)), ScoreMethod.MSP, classifier_kind)


def maxlogit_score(
    o: LogitVector, tau: float, classifier_kind: ClassifierKind | None = None
) -> IdScore:
    """Maximum logit rescaled by the temperature that produced the logits."""
    if not tau > 0:
        raise InvariantError("temperature must be strictly positive")
    return IdScore(float(maxlogit_rows(o.values, tau)), ScoreMethod.MAX_LOGIT, classifier_kind)


def energy_score(
    o: LogitVector,
    tau: float,
    classifier_kind: ClassifierKind | None = None,
    normalization: EnergyNormalization = EnergyNormalization.LITERAL,
) -> IdScore:
    """Scaled negative free energy of one logit vector."""
    if not tau > 0:
        raise InvariantError("temperature must be strictly positive")
    value = float(energy_rows(o.values, tau, normalization))
    return IdScore(value, ScoreMethod.ENERGY, classifier_kind)


def entropy_score(p: Posterior, classifier_kind: ClassifierKind | None = None) -> IdScore:
    """Negative normalized entropy of one posterior."""
    return IdScore(float(entropy_rows(p.probs)), ScoreMethod.ENTROPY, classifier_kind)


def score_rows(
    cosines: np.ndarray,
    tau: float,
    method: ScoreMethod,
    energy_normalization: EnergyNormalization = EnergyNormalization.LITERAL,
) -> np.ndarray:
    """ID scores for a batch, from the (n, N) cosine matrix of one classifier."""
    logit_rows = cosines / tau
    if method is ScoreMethod.MSP:
        return msp_rows(stable_softmax(logit_rows))
    if method is ScoreMethod.MAX_LOGIT:
        return maxlogit_rows(logit_rows, tau)
    if method is ScoreMethod.ENERGY:
        return energy_rows(logit_rows, tau, energy_normalization)
    return entropy_rows(stable_softmax(logit_rows))


def id_score(
    x: Embedding,
    classifier: ClassifierWeights,
    method: ScoreMethod,
    energy_normalization: EnergyNormalization = EnergyNormalization.LITERAL,
) -> IdScore:
    """Compute the selected ID score of one sample under one classifier."""
    o = compute_logits(x, classifier)
    tau = classifier.temperature
    if method is ScoreMethod.MSP:
        return msp_score(softmax_posterior(o), classifier.kind)
    if method is ScoreMethod.MAX_LOGIT:
        return maxlogit_score(o, tau, classifier.kind)
    if method is ScoreMethod.ENERGY:
        return energy_score(o, tau, classifier.kind, energy_normalization)
    return entropy_score(softmax_posterior(o), classifier.kind)

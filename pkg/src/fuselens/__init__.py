"""Score-driven dynamic fusion of zero-shot and few-shot cosine classifiers.

The package classifies embedded samples by blending two classifiers per
sample, weighted by how in-distribution the sample looks to each, and
provides the evaluation protocols, routing-model analysis, file formats,
CLI and HTTP service around that core.
"""

__version__ = "0.1.0"

from .analysis import (
    ContourGrid,
    HMeanReport,
    MonteCarloReport,
    OperatingPoint,
    contour_grid,
    harmonic_mean,
    monte_carlo_hmean,
    proposition_hmean,
)
from .core import (
    DEFAULT_TEMPERATURE,
    ClassifierKind,
    ClassifierWeights,
    Embedding,
    LogitVector,
    Posterior,
    Split,
    cosine_similarity,
    logits,
    softmax_posterior,
)
from .data import (
    SyntheticBundle,
    SyntheticSpec,
    generate_synthetic,
    load_embeddings,
    read_classifier,
    read_embeddings,
    read_embeddings_jsonl,
    write_classifier,
    write_embeddings,
    write_embeddings_jsonl,
)
from .errors import FormatError, FuseLensError, InvariantError
from .evaluation import (
    AlphaSweepResult,
    DomainEvalReport,
    EvalReport,
    EvalSet,
    TraceRow,
    accuracy,
    alpha_sweep,
    base_to_novel_eval,
    domain_generalization_eval,
    static_sweep,
)
from .fusion import (
    FusedPrediction,
    FusionConfig,
    FusionTarget,
    FusionWeight,
    SingleClassifierRule,
    classify_batch,
    classify_fused,
    competition_score,
    fuse_posteriors,
    fuse_weights,
    single_classifier_weight,
)
from .scores import (
    EnergyNormalization,
    IdScore,
    ScoreMethod,
    energy_score,
    entropy_score,
    id_score,
    maxlogit_score,
    msp_score,
)

__all__ = [
    "__version__",
    "DEFAULT_TEMPERATURE",
    "AlphaSweepResult",
    "ClassifierKind",
    "ClassifierWeights",
    "ContourGrid",
    "DomainEvalReport",
    "Embedding",
    "EnergyNormalization",
    "EvalReport",
    "EvalSet",
    "FormatError",
    "FuseLensError",
    "FusedPrediction",
    "FusionConfig",
    "FusionTarget",
    "FusionWeight",
    "HMeanReport",
    "IdScore",
    "InvariantError",
    "LogitVector",
    "MonteCarloReport",
    "OperatingPoint",
    "Posterior",
    "ScoreMethod",
    "SingleClassifierRule",
    "Split",
    "SyntheticBundle",
    "SyntheticSpec",
    "TraceRow",
    "accuracy",
    "alpha_sweep",
    "base_to_novel_eval",
    "classify_batch",
    "classify_fused",
    "competition_score",
    "contour_grid",
    "cosine_similarity",
    "domain_generalization_eval",
    "energy_score",
    "entropy_score",
    "fuse_posteriors",
    "fuse_weights",
    "generate_synthetic",
    "harmonic_mean",
    "id_score",
    "load_embeddings",
    "logits",
    "maxlogit_score",
    "monte_carlo_hmean",
    "msp_score",
    "proposition_hmean",
    "read_classifier",
    "read_embeddings",
    "read_embeddings_jsonl",
    "single_classifier_weight",
    "softmax_posterior",
    "static_sweep",
    "write_classifier",
    "write_embeddings",
    "write_embeddings_jsonl",
]

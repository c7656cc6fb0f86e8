"""HTTP service wrapping the library for long-running, multi-client use.

Classifier pairs are registered once and kept in memory; classification
requests then carry only an embedding. The closed-form and Monte Carlo
routing analysis is exposed stateless. Start with `fuselens serve` or by
pointing uvicorn at `fuselens.service:app`.
"""

from __future__ import annotations

import math
import threading
from typing import Literal

import numpy as np
from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import __version__
from .analysis import OperatingPoint, contour_grid, monte_carlo_hmean, proposition_hmean
from .core import ClassifierKind, ClassifierWeights, Embedding
from .errors import FuseLensError, InvariantError
from .fusion import FusionConfig, FusionTarget, SingleClassifierRule, classify_fused
from .scores import EnergyNormalization, ScoreMethod

app = FastAPI(
    title="fuselens",
    description="Score-driven dynamic fusion of zero-shot and few-shot classifiers",
    version=__version__,
)


class _Registry:
    """Thread-safe in-memory store of named classifiers."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._classifiers: dict[str, ClassifierWeights] = {}

    def put(self, name: str, classifier: ClassifierWeights) -> None:
        with self._lock:
            self._classifiers[name] = classifier

    def get(self, name: str) -> ClassifierWeights:
        with self._lock:
            if name not in self._classifiers:
                raise KeyError(name)
            return self._classifiers[name]

    def names(self) -> list[str]:
        with self._lock:
            return sorted(self._classifiers)

    def clear(self) -> None:
        with self._lock:
            self._classifiers.clear()


registry = _Registry()


class HealthResponse(BaseModel):
    status: Literal["ok"] = "ok"
    version: str = __version__


class OperatingPointRequest(BaseModel):
    p0: float = Field(ge=0.0, le=1.0)
    p1: float = Field(ge=0.0, le=1.0)
    q0: float = Field(ge=0.0, le=1.0)
    q1: float = Field(ge=0.0, le=1.0)
    rb: float = Field(ge=0.0, le=1.0)
    rn: float = Field(ge=0.0, le=1.0)

    def to_point(self) -> OperatingPoint:
        return OperatingPoint(self.p0, self.p1, self.q0, self.q1, self.rb, self.rn)


class HMeanResponse(BaseModel):
    pb: float
    pn: float
    h: float


class ContourRequest(BaseModel):
    p0: float = Field(ge=0.0, le=1.0)
    p1: float = Field(ge=0.0, le=1.0)
    q0: float = Field(ge=0.0, le=1.0)
    q1: float = Field(ge=0.0, le=1.0)
    resolution: int = Field(default=101, ge=2, le=2001)


class ContourResponse(BaseModel):
    resolution: int
    axis_order: str
    rb_values: list[float]
    rn_values: list[float]
    h: list[list[float]]


class SimulateRequest(OperatingPointRequest):
    n_base: int = Field(default=1_000_000, ge=1, le=100_000_000)
    n_novel: int = Field(default=1_000_000, ge=1, le=100_000_000)
    seed: int = 0


class SimulateResponse(BaseModel):
    pb: float
    pn: float
    h: float
    n_base: int
    n_novel: int
    base_correct: int
    novel_correct: int
    base_fewshot_routed: int
    novel_fewshot_routed: int
    seed: int
    generator: str


class ClassifierUpload(BaseModel):
    name: str = Field(min_length=1, max_length=128)
    kind: Literal["zero_shot", "few_shot"]
    temperature: float = Field(gt=0.0)
    class_names: list[str] = Field(min_length=2)
    weights: list[list[float]]


class ClassifierSummary(BaseModel):
    name: str
    kind: str
    n_classes: int
    dim: int
    temperature: float


class FusionConfigModel(BaseModel):
    method: Literal["msp", "maxlogit", "energy", "entropy"] = "entropy"
    alpha: float | Literal["inf"] = 64.0
    target: Literal["weights", "posteriors"] = "weights"
    static_weight: float | None = Field(default=None, ge=0.0, le=1.0)
    single_classifier_rule: Literal["fs-msp", "one-minus-zs-msp"] | None = None
    energy_normalization: Literal["literal", "unit-range"] = "literal"
    prenormalize_rows: bool = False

    def to_config(self) -> FusionConfig:
        return FusionConfig(
            method=ScoreMethod.from_name(self.method),
            alpha=math.inf if self.alpha == "inf" else float(self.alpha),
            target=FusionTarget(self.target),
            static_weight=self.static_weight,
            single_classifier_rule=(
                SingleClassifierRule(self.single_classifier_rule)
                if self.single_classifier_rule
                else None
            ),
            energy_normalization=EnergyNormalization(self.energy_normalization),
            prenormalize_rows=self.prenormalize_rows,
        )


class ClassifyRequest(BaseModel):
    fewshot: str
    zeroshot: str
    values: list[float] = Field(min_length=1)
    config: FusionConfigModel = FusionConfigModel()


class ClassifyResponse(BaseModel):
    predicted: int
    class_name: str
    fusion_weight: float
    posterior: list[float]


def _bad_request(exc: Exception) -> HTTPException:
    return HTTPException(status_code=422, detail=str(exc))


@app.get("/health", response_model=HealthResponse)
def health() -> HealthResponse:
    return HealthResponse()


@app.post("/analysis/hmean", response_model=HMeanResponse)
def analysis_hmean(req: OperatingPointRequest) -> HMeanResponse:
    report = proposition_hmean(req.to_point())
    return HMeanResponse(pb=report.pb, pn=report.pn, h=report.h)


@app.post("/analysis/contour", response_model=ContourResponse)
def analysis_contour(req: ContourRequest) -> ContourResponse:
    grid = contour_grid(req.p0, req.p1, req.q0, req.q1, req.resolution)
    return ContourResponse(
        resolution=grid.resolution,
        axis_order=grid.axis_order,
        rb_values=list(grid.rb_values),
        rn_values=list(grid.rn_values),
        h=[list(row) for row in grid.h],
    )


@app.post("/analysis/simulate", response_model=SimulateResponse)
def analysis_simulate(req: SimulateRequest) -> SimulateResponse:
    report = monte_carlo_hmean(req.to_point(), req.n_base, req.n_novel, req.seed)
    return SimulateResponse(
        pb=report.pb,
        pn=report.pn,
        h=report.h,
        n_base=report.n_base,
        n_novel=report.n_novel,
        base_correct=report.base_correct,
        novel_correct=report.novel_correct,
        base_fewshot_routed=report.base_fewshot_routed,
        novel_fewshot_routed=report.novel_fewshot_routed,
        seed=report.seed,
        generator=report.generator,
    )


@app.post("/classifiers", response_model=ClassifierSummary)
def register_classifier(req: ClassifierUpload) -> ClassifierSummary:
    try:
        classifier = ClassifierWeights(
            weights=np.asarray(req.weights, dtype=np.float64),
            class_names=tuple(req.class_names),
            temperature=req.temperature,
            kind=ClassifierKind(req.kind),
        )
    except (InvariantError, ValueError) as exc:
        raise _bad_request(exc) from exc
    registry.put(req.name, classifier)
    return ClassifierSummary(
        name=req.name,
        kind=classifier.kind.value,
        n_classes=classifier.n_classes,
        dim=classifier.dim,
        temperature=classifier.temperature,
    )


@app.get("/classifiers", response_model=list[str])
def list_classifiers() -> list[str]:
    return registry.names()


@app.post("/classify", response_model=ClassifyResponse)
def classify(req: ClassifyRequest) -> ClassifyResponse:
    try:
        fs = registry.get(req.fewshot)
        zs = registry.get(req.zeroshot)
    except KeyError as exc:
        raise HTTPException(status_code=404, detail=f"unknown classifier {exc.args[0]!r}") from exc
    try:
        prediction = classify_fused(
            Embedding(values=np.asarray(req.values, dtype=np.float64)),
            fs,
            zs,
            req.config.to_config(),
        )
    except FuseLensError as exc:
        raise _bad_request(exc) from exc
    return ClassifyResponse(
        predicted=prediction.predicted,
        class_name=fs.class_names[prediction.predicted],
        fusion_weight=prediction.weight.value,
        posterior=[float(p) for p in prediction.posterior.probs],
    )

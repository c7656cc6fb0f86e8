"""Harmonic-mean accuracy under probabilistic routing between two classifiers.

Models test-time selection as a binary router: a base-split sample is sent
to the few-shot classifier with probability rb (novel split: rn), and the
chosen branch is correct with that branch's accuracy on that split. The
closed form follows from the law of total probability:

    Pb = p1*rb + p0*(1-rb)
    Pn = q1*rn + q0*(1-rn)
    H  = 2*Pb*Pn / (Pb + Pn)

`monte_carlo_hmean` estimates the same quantities by simulation and serves
as an empirical check on the closed form.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvariantError

MC_GENERATOR = "pcg64"


@dataclass(frozen=True)
class OperatingPoint:
    """Branch accuracies and routing probabilities, all in [0, 1].

    p0/p1: zero-shot/few-shot accuracy on the base split; q0/q1 the same on
    the novel split; rb/rn: probability of routing a base/novel sample to
    the few-shot branch.
    """

    p0: float
    p1: float
    q0: float
    q1: float
    rb: float
    rn: float

    def __post_init__(self) -> None:
        for name in ("p0", "p1", "q0", "q1", "rb", "rn"):
            v = float(getattr(self, name))
            if not (0.0 <= v <= 1.0):
                raise InvariantError(f"{name}={v} outside [0, 1]")
            object.__setattr__(self, name, v)


@dataclass(frozen=True)
class HMeanReport:
    """Per-split accuracies and their harmonic mean."""

    pb: float
    pn: float
    h: float


@dataclass(frozen=True, eq=False)
class ContourGrid:
    """H over a uniform (rb, rn) grid; h[i, j] = H(rb_values[i], rn_values[j]).

    Rows index rb and columns index rn (recorded in `axis_order` so plots
    cannot transpose silently). pb_values depends only on rb and pn_values
    only on rn.
    """

    p0: float
    p1: float
    q0: float
    q1: float
    resolution: int
    rb_values: np.ndarray
    rn_values: np.ndarray
    pb_values: np.ndarray
    pn_values: np.ndarray
    h: np.ndarray
    axis_order: str = "rows=rb,cols=rn"


@dataclass(frozen=True)
class MonteCarloReport:
    """Simulation estimate plus the exact counts behind the ratios.

    Counts allow bit-exact regression checks; pb = base_correct / n_base and
    pn = novel_correct / n_novel.
    """

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
    generator: str = MC_GENERATOR


def harmonic_mean(a: float, b: float) -> float:
    """2ab/(a+b) for non-negative a, b; 0 when both are 0."""
    if a < 0 or b < 0:
        raise InvariantError("harmonic mean requires non-negative inputs")
    if a + b == 0:
        return 0.0
    return 2.0 * a * b / (a + b)


def proposition_hmean(op: OperatingPoint) -> HMeanReport:
    """Closed-form per-split accuracies and harmonic mean of the router."""
    pb = op.p1 * op.rb + op.p0 * (1.0 - op.rb)
    pn = op.q1 * op.rn + op.q0 * (1.0 - op.rn)
    return HMeanReport(pb=pb, pn=pn, h=harmonic_mean(pb, pn))


def contour_grid(
    p0: float, p1: float, q0: float, q1: float, resolution: int
) -> ContourGrid:
    """Evaluate the closed form over a uniform resolution x resolution grid."""
    if resolution < 2:
        raise InvariantError("grid resolution must be at least 2")
    for name, v in (("p0", p0), ("p1", p1), ("q0", q0), ("q1", q1)):
        if not (0.0 <= float(v) <= 1.0):
            raise InvariantError(f"{name}={v} outside [0, 1]")
    axis = np.linspace(0.0, 1.0, resolution)
    pb = p1 * axis + p0 * (1.0 - axis)
    pn = q1 * axis + q0 * (1.0 - axis)
    num = 2.0 * pb[:, None] * pn[None, :]
    den = pb[:, None] + pn[None, :]
    h = np.divide(num, den, out=np.zeros_like(num), where=den != 0.0)
    h.setflags(write=False)
    return ContourGrid(
        p0=float(p0),
        p1=float(p1),
        q0=float(q0),
        q1=float(q1),
        resolution=int(resolution),
        rb_values=axis,
        rn_values=axis.copy(),
        pb_values=pb,
        pn_values=pn,
        h=h,
    )


def monte_carlo_hmean(
    op: OperatingPoint, n_base: int, n_novel: int, seed: int
) -> MonteCarloReport:
    """Simulate the router and report empirical Pb, Pn, H.

    One pseudo-random stream (PCG64) is consumed in a fixed order: for each
    sample, the routing draw then the correctness draw; the base split is
    consumed before the novel split. Deterministic given the seed.
    """
    if n_base < 1 or n_novel < 1:
        raise InvariantError("simulation needs at least one sample per split")
    rng = np.random.default_rng(seed)
    base_correct, base_routed = _simulate_split(rng, n_base, op.rb, op.p1, op.p0)
    novel_correct, novel_routed = _simulate_split(rng, n_novel, op.rn, op.q1, op.q0)
    pb = base_correct / n_base
    pn = novel_correct / n_novel
    return MonteCarloReport(
        pb=pb,
        pn=pn,
        h=harmonic_mean(pb, pn),
        n_base=int(n_base),
        n_novel=int(n_novel),
        base_correct=base_correct,
        novel_correct=novel_correct,
        base_fewshot_routed=base_routed,
        novel_fewshot_routed=novel_routed,
        seed=int(seed),
    )


def _simulate_split(
    rng: np.random.Generator,
    n: int,
    route_p: float,
    acc_fewshot: float,
    acc_zeroshot: float,
) -> tuple[int, int]:
    # random((n, 2)) fills row-major, so the stream order is exactly
    # routing-then-correctness per sample.
    draws = rng.random((n, 2))
    routed = draws[:, 0] < route_p
    accuracy = np.where(routed, acc_fewshot, acc_zeroshot)
    correct = draws[:, 1] < accuracy
    return int(np.count_nonzero(correct)), int(np.count_nonzero(routed))

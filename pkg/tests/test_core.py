"""Core types and classifier math: construction invariants and exact values."""

import math

import numpy as np
import pytest

from fuselens import (
    ClassifierKind,
    ClassifierWeights,
    Embedding,
    InvariantError,
    LogitVector,
    Posterior,
    cosine_similarity,
    logits,
    softmax_posterior,
)

# Independent dot/norm oracle, frozen before the main build:
# dot([1,2,3],[-2,1,0.5]) = 1.5; norms sqrt(14), sqrt(5.25).
COSINE_123_ORACLE = 0.17496355305594133


class TestCosineSimilarity:
    def test_identical_directions(self):
        assert cosine_similarity([1.0, 0.0], [1.0, 0.0]) == 1.0

    def test_orthogonal(self):
        assert cosine_similarity([1.0, 0.0], [0.0, 1.0]) == 0.0

    def test_frozen_oracle_value(self):
        got = cosine_similarity([1, 2, 3], [-2, 1, 0.5])
        assert got == pytest.approx(COSINE_123_ORACLE, abs=1e-15)

    def test_matches_scalar_oracle_on_random_pairs(self, rng):
        for _ in range(50):
            a = rng.normal(size=6)
            b = rng.normal(size=6)
            dot = sum(float(x) * float(y) for x, y in zip(a, b))
            na = math.sqrt(sum(float(x) ** 2 for x in a))
            nb = math.sqrt(sum(float(y) ** 2 for y in b))
            assert cosine_similarity(a, b) == pytest.approx(dot / (na * nb), abs=1e-12)

    def test_clamped_to_unit_interval(self, rng):
        # Parallel vectors may land an ulp inside the bound; never outside it.
        for _ in range(50):
            v = rng.normal(size=16)
            up = cosine_similarity(v, 3.0 * v)
            down = cosine_similarity(v, -2.5 * v)
            assert up <= 1.0 and up == pytest.approx(1.0, abs=1e-12)
            assert down >= -1.0 and down == pytest.approx(-1.0, abs=1e-12)

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(InvariantError):
            cosine_similarity([1.0, 2.0], [1.0, 2.0, 3.0])

    def test_zero_norm_rejected(self):
        with pytest.raises(InvariantError):
            cosine_similarity([0.0, 0.0], [1.0, 0.0])


class TestLogits:
    def test_aligned_row_hits_inverse_temperature(self):
        w = ClassifierWeights(
            weights=np.vstack([np.eye(4)]),
            class_names=("a", "b", "c", "d"),
            temperature=0.01,
        )
        x = Embedding([0.0, 0.0, 0.0, 2.0])
        o = logits(x, w)
        assert o.values[3] == pytest.approx(100.0, abs=1e-9)

    def test_orthogonal_sample_gives_zero_logits(self):
        w = ClassifierWeights(np.eye(3)[:2], ("a", "b"), temperature=0.5)
        x = Embedding([0.0, 0.0, 1.0])
        assert np.array_equal(logits(x, w).values, np.zeros(2))

    def test_matches_per_row_cosine_oracle(self, rng):
        w = ClassifierWeights(rng.normal(size=(4, 7)), ("a", "b", "c", "d"), 0.2)
        x = Embedding(rng.normal(size=7))
        o = logits(x, w)
        for i in range(4):
            expected = cosine_similarity(x.values, w.weights[i]) / 0.2
            assert o.values[i] == pytest.approx(expected, abs=1e-12)

    def test_dimension_mismatch_rejected(self):
        w = ClassifierWeights(np.eye(2), ("a", "b"))
        with pytest.raises(InvariantError):
            logits(Embedding([1.0, 2.0, 3.0]), w)

    def test_argmax_invariant_to_positive_rescaling(self, rng):
        w = ClassifierWeights(rng.normal(size=(5, 9)), tuple("abcde"), 0.1)
        for _ in range(20):
            v = rng.normal(size=9)
            base = np.argmax(logits(Embedding(v), w).values)
            scaled = np.argmax(logits(Embedding(17.5 * v), w).values)
            assert base == scaled


class TestSoftmaxPosterior:
    def test_uniform_on_equal_logits(self):
        p = softmax_posterior(LogitVector(np.full(5, 3.7)))
        assert np.array_equal(p.probs, np.full(5, 0.2))

    def test_closed_form_two_class(self):
        p = softmax_posterior(LogitVector([0.0, math.log(3.0)]))
        assert p.probs[0] == pytest.approx(0.25, abs=1e-15)
        assert p.probs[1] == pytest.approx(0.75, abs=1e-15)

    def test_huge_spread_does_not_overflow(self):
        import mpmath

        values = [0.0, 1.0e4, 37.0, -50.0]
        p = softmax_posterior(LogitVector(values))
        assert np.all(np.isfinite(p.probs))
        # extended-precision oracle
        exps = [mpmath.e**v for v in mpmath.mpf(1) * np.array(values)]
        total = sum(exps)
        for got, want in zip(p.probs, [e / total for e in exps]):
            assert got == pytest.approx(float(want), abs=1e-12)
        assert p.probs[1] == pytest.approx(1.0, abs=1e-12)

    def test_sums_to_one(self, rng):
        for _ in range(100):
            p = softmax_posterior(LogitVector(rng.normal(scale=30.0, size=8)))
            assert abs(p.probs.sum() - 1.0) <= 1e-9

    def test_permutation_equivariance(self, rng):
        values = rng.normal(size=6)
        perm = rng.permutation(6)
        direct = softmax_posterior(LogitVector(values[perm])).probs
        permuted = softmax_posterior(LogitVector(values)).probs[perm]
        assert np.allclose(direct, permuted, atol=1e-15)

    def test_shift_invariance(self, rng):
        values = rng.normal(size=6)
        p1 = softmax_posterior(LogitVector(values)).probs
        p2 = softmax_posterior(LogitVector(values + 123.456)).probs
        assert np.allclose(p1, p2, atol=1e-12)


class TestTypeInvariants:
    def test_embedding_rejects_zero_vector(self):
        with pytest.raises(InvariantError):
            Embedding([0.0, 0.0, 0.0])

    def test_embedding_rejects_non_finite(self):
        with pytest.raises(InvariantError):
            Embedding([1.0, float("nan")])
        with pytest.raises(InvariantError):
            Embedding([1.0, float("inf")])

    def test_embedding_rejects_empty(self):
        with pytest.raises(InvariantError):
            Embedding([])

    def test_embedding_values_immutable(self):
        x = Embedding([1.0, 2.0])
        with pytest.raises(ValueError):
            x.values[0] = 5.0

    def test_classifier_rejects_single_class(self):
        with pytest.raises(InvariantError):
            ClassifierWeights([[1.0, 0.0]], ("only",))

    def test_classifier_rejects_zero_row(self):
        with pytest.raises(InvariantError):
            ClassifierWeights([[1.0, 0.0], [0.0, 0.0]], ("a", "b"))

    def test_classifier_rejects_duplicate_names(self):
        with pytest.raises(InvariantError):
            ClassifierWeights(np.eye(2), ("a", "a"))

    def test_classifier_rejects_name_count_mismatch(self):
        with pytest.raises(InvariantError):
            ClassifierWeights(np.eye(3), ("a", "b"))

    def test_classifier_rejects_bad_temperature(self):
        for tau in (0.0, -1.0, float("nan")):
            with pytest.raises(InvariantError):
                ClassifierWeights(np.eye(2), ("a", "b"), temperature=tau)

    def test_classifier_kind_default(self):
        w = ClassifierWeights(np.eye(2), ("a", "b"))
        assert w.kind is ClassifierKind.ZERO_SHOT

    def test_posterior_rejects_bad_sum(self):
        with pytest.raises(InvariantError):
            Posterior([0.5, 0.6])

    def test_posterior_rejects_negative(self):
        with pytest.raises(InvariantError):
            Posterior([1.1, -0.1])

    def test_logit_vector_rejects_non_finite(self):
        with pytest.raises(InvariantError):
            LogitVector([1.0, float("inf")])

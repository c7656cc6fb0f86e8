"""Closed-form routing analysis and its Monte Carlo verification."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fuselens import (
    InvariantError,
    OperatingPoint,
    contour_grid,
    harmonic_mean,
    monte_carlo_hmean,
    proposition_hmean,
)

# Reference operating point used throughout: zero-shot 0.6/0.8 and few-shot
# 0.9/0.6 accuracy on the base/novel split.
P0, P1, Q0, Q1 = 0.6, 0.9, 0.8, 0.6

H_ZS = 0.6857142857142857   # both splits on the zero-shot branch
H_FS = 0.7200000000000001   # both splits on the few-shot branch
H_BEST = 0.8470588235294118  # base routed few-shot, novel routed zero-shot


def _op(rb, rn):
    return OperatingPoint(P0, P1, Q0, Q1, rb, rn)


class TestHarmonicMean:
    def test_published_base_novel_pair(self):
        # 82.29 / 67.63 percent must combine to 74.24.
        assert harmonic_mean(82.29, 67.63) == pytest.approx(74.24, abs=0.01)

    def test_reference_point_value(self):
        assert harmonic_mean(0.6, 0.8) == pytest.approx(H_ZS, abs=1e-15)

    @given(st.floats(0.0, 1e6))
    @settings(max_examples=200, deadline=None)
    def test_idempotent_on_equal_arguments(self, x):
        assert harmonic_mean(x, x) == pytest.approx(x, rel=1e-12, abs=1e-12)

    def test_zero_pair(self):
        assert harmonic_mean(0.0, 0.0) == 0.0
        assert harmonic_mean(0.0, 0.7) == 0.0

    def test_negative_rejected(self):
        with pytest.raises(InvariantError):
            harmonic_mean(-0.1, 0.5)

    @given(st.floats(0.001, 1.0), st.floats(0.001, 1.0))
    @settings(max_examples=200, deadline=None)
    def test_between_min_and_max(self, a, b):
        h = harmonic_mean(a, b)
        assert min(a, b) - 1e-12 <= h <= max(a, b) + 1e-12


class TestClosedForm:
    def test_best_routing_anchor(self):
        report = proposition_hmean(_op(rb=1.0, rn=0.0))
        assert report.pb == pytest.approx(0.9, abs=1e-15)
        assert report.pn == pytest.approx(0.8, abs=1e-15)
        assert report.h == pytest.approx(H_BEST, abs=1e-15)

    def test_zeroshot_everywhere_anchor(self):
        report = proposition_hmean(_op(rb=0.0, rn=0.0))
        assert report.pb == pytest.approx(0.6, abs=1e-15)
        assert report.h == pytest.approx(H_ZS, abs=5e-4)

    def test_fewshot_everywhere_anchor(self):
        report = proposition_hmean(_op(rb=1.0, rn=1.0))
        assert report.pb == pytest.approx(0.9, abs=1e-15)
        assert report.pn == pytest.approx(0.6, abs=1e-15)
        assert report.h == pytest.approx(0.72, abs=5e-4)

    def test_hmean_identity_holds_everywhere(self, rng):
        # h * (pb + pn) == 2 * pb * pn within 1e-12 for every report
        for _ in range(200):
            op = OperatingPoint(*rng.uniform(size=6))
            r = proposition_hmean(op)
            assert r.h * (r.pb + r.pn) == pytest.approx(2.0 * r.pb * r.pn, abs=1e-12)

    def test_operating_point_bounds_enforced(self):
        with pytest.raises(InvariantError):
            OperatingPoint(1.2, 0.5, 0.5, 0.5, 0.5, 0.5)
        with pytest.raises(InvariantError):
            OperatingPoint(0.5, 0.5, 0.5, 0.5, 0.5, -0.01)


class TestContourGrid:
    def test_resolution_two_hits_all_corners(self):
        grid = contour_grid(P0, P1, Q0, Q1, 2)
        assert grid.h.shape == (2, 2)
        assert grid.h[1, 0] == pytest.approx(H_BEST, abs=1e-15)  # rb=1, rn=0
        assert grid.h[0, 0] == pytest.approx(H_ZS, abs=1e-15)
        assert grid.h[1, 1] == pytest.approx(0.72, abs=1e-12)

    def test_constant_classifiers_give_flat_grid(self):
        grid = contour_grid(0.37, 0.37, 0.37, 0.37, 11)
        assert np.allclose(grid.h, 0.37, atol=1e-12)

    def test_exhaustive_scan_finds_best_corner(self):
        grid = contour_grid(P0, P1, Q0, Q1, 101)
        flat_best = np.unravel_index(np.argmax(grid.h), grid.h.shape)
        assert flat_best == (100, 0)  # rb = 1, rn = 0
        assert grid.h[flat_best] == pytest.approx(H_BEST, abs=1e-12)

    def test_cells_match_closed_form(self):
        grid = contour_grid(P0, P1, Q0, Q1, 7)
        for i in range(7):
            for j in range(7):
                want = proposition_hmean(_op(grid.rb_values[i], grid.rn_values[j])).h
                assert grid.h[i, j] == pytest.approx(want, abs=1e-12)

    def test_monotone_in_rb_and_rn(self):
        # Few-shot is better on base (p1 > p0) so H grows with rb; it is
        # worse on novel (q1 < q0) so H shrinks with rn.
        grid = contour_grid(P0, P1, Q0, Q1, 51)
        assert np.all(np.diff(grid.h, axis=0) >= -1e-15)
        assert np.all(np.diff(grid.h, axis=1) <= 1e-15)

    def test_random_detector_diagonal_shape(self):
        # The rb = rn = t diagonal starts at the all-zero-shot value, ends at
        # the all-few-shot value, moves continuously, and has a single
        # interior maximum (moderate mixing can beat both pure classifiers,
        # so the path is not monotone).
        ts = np.linspace(0.0, 1.0, 201)
        hs = np.array([proposition_hmean(_op(t, t)).h for t in ts])
        assert hs[0] == pytest.approx(H_ZS, abs=1e-12)
        assert hs[-1] == pytest.approx(0.72, abs=1e-12)
        assert np.max(np.abs(np.diff(hs))) < 0.01  # continuity at this step
        signs = np.sign(np.diff(hs))
        assert np.count_nonzero(np.diff(signs) != 0) == 1
        assert hs.max() > max(hs[0], hs[-1])

    def test_small_resolution_rejected(self):
        with pytest.raises(InvariantError):
            contour_grid(P0, P1, Q0, Q1, 1)


class TestMonteCarlo:
    def test_degenerate_probabilities_are_exact(self):
        op = OperatingPoint(p0=0.0, p1=1.0, q0=1.0, q1=0.0, rb=1.0, rn=0.0)
        for seed in (0, 1, 99):
            r = monte_carlo_hmean(op, 500, 500, seed)
            assert (r.pb, r.pn, r.h) == (1.0, 1.0, 1.0)
            assert r.base_fewshot_routed == 500
            assert r.novel_fewshot_routed == 0

    def test_close_to_closed_form_at_one_million(self):
        op = _op(rb=0.8, rn=0.3)
        want = proposition_hmean(op)
        for seed in (1, 2):
            got = monte_carlo_hmean(op, 1_000_000, 1_000_000, seed)
            assert abs(got.pb - want.pb) <= 0.005
            assert abs(got.pn - want.pn) <= 0.005
            assert abs(got.h - want.h) <= 0.005

    def test_deterministic_given_seed(self):
        op = _op(rb=0.8, rn=0.3)
        a = monte_carlo_hmean(op, 10_000, 10_000, 77)
        b = monte_carlo_hmean(op, 10_000, 10_000, 77)
        assert a == b

    def test_frozen_counts_regression(self):
        # Pins the stream order (routing then correctness per sample, base
        # split first) and the generator family.
        r = monte_carlo_hmean(_op(rb=0.8, rn=0.3), 1000, 1000, 7)
        assert r.generator == "pcg64"
        assert (r.base_correct, r.novel_correct) == (845, 728)
        assert (r.base_fewshot_routed, r.novel_fewshot_routed) == (790, 301)
        assert r.h == pytest.approx(0.7821487603305785, abs=1e-15)

    def test_counts_back_the_ratios(self):
        r = monte_carlo_hmean(_op(rb=0.5, rn=0.5), 3000, 2000, 5)
        assert r.pb == r.base_correct / 3000
        assert r.pn == r.novel_correct / 2000
        assert r.h == pytest.approx(harmonic_mean(r.pb, r.pn), abs=1e-15)

    def test_rejects_empty_split(self):
        with pytest.raises(InvariantError):
            monte_carlo_hmean(_op(0.5, 0.5), 0, 100, 1)

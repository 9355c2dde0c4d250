"""Square-root inverse-Fisher recursions against dense oracles."""

import math
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fishermala.errors import InvalidParameterError, InvalidSignalError
from fishermala.preconditioner import (
    PairedEstimator,
    SqrtPreconditioner,
    normalized_matrix,
    paired_update,
    sqrt_init,
    sqrt_update,
    sqrt_update_general,
    woodbury_update,
)

from helpers import rel_fro


def direct_inverse(signals, lam):
    S = np.asarray(signals)
    return np.linalg.inv(S.T @ S + lam * np.eye(S.shape[1]))


class TestSqrtInit:
    def test_zero_signal_gives_identity_over_sqrt_lam(self):
        p = sqrt_init(np.zeros(2), 1.0)
        assert np.array_equal(p.R, np.eye(2))
        assert p.n == 1

    def test_scalar_case(self):
        # d=1: A1 = 1/(s^2 + lam) = 1/2, R1 = 1/sqrt(2)
        p = sqrt_init(np.array([1.0]), 1.0)
        assert p.R[0, 0] == pytest.approx(0.7071067811865475, abs=1e-12)
        assert p.matrix()[0, 0] == pytest.approx(0.5, abs=1e-12)

    def test_matches_dense_inverse(self):
        rng = np.random.default_rng(0)
        s1 = rng.standard_normal(8)
        p = sqrt_init(s1, 10.0)
        oracle = direct_inverse(s1[None, :], 10.0)
        assert rel_fro(p.matrix(), oracle) < 1e-10

    def test_rejects_bad_inputs(self):
        with pytest.raises(InvalidSignalError):
            sqrt_init(np.array([1.0, np.nan]), 1.0)
        with pytest.raises(InvalidParameterError):
            sqrt_init(np.ones(3), 0.0)
        with pytest.raises(InvalidParameterError):
            sqrt_init(np.ones(3), -2.0)


class TestSqrtUpdate:
    def test_zero_signal_is_noop_but_counts(self):
        p = sqrt_init(np.ones(4), 10.0)
        R_before = p.R.copy()
        sqrt_update(p, np.zeros(4))
        assert np.array_equal(p.R, R_before)
        assert p.n == 2

    def test_requires_initialized(self):
        p = SqrtPreconditioner(3, 1.0)
        with pytest.raises(InvalidParameterError):
            sqrt_update(p, np.ones(3))

    def test_long_run_matches_direct_inverse(self):
        rng = np.random.default_rng(1)
        signals = rng.standard_normal((200, 20))
        p = sqrt_init(signals[0], 10.0)
        for s in signals[1:]:
            sqrt_update(p, s)
        assert rel_fro(p.matrix(), direct_inverse(signals, 10.0)) < 1e-8

    def test_tracks_woodbury_sequence_stepwise(self):
        rng = np.random.default_rng(2)
        signals = rng.standard_normal((150, 12))
        lam = 10.0
        p = sqrt_init(signals[0], lam)
        A = direct_inverse(signals[:1], lam)
        for s in signals[1:]:
            sqrt_update(p, s)
            A = woodbury_update(A, s)
            assert rel_fro(p.matrix(), A) < 1e-9

    def test_trace_cache(self):
        rng = np.random.default_rng(3)
        p = sqrt_init(rng.standard_normal(7), 1.0)
        for _ in range(50):
            sqrt_update(p, rng.standard_normal(7))
            fresh = float(np.sum(p.R * p.R))
            assert p.trace_rrt == pytest.approx(fresh, rel=1e-10)

    def test_positive_definite_throughout(self):
        rng = np.random.default_rng(4)
        signals = rng.standard_normal((120, 10)) * 3.0
        p = sqrt_init(signals[0], 1.0)
        for i, s in enumerate(signals[1:], start=2):
            sqrt_update(p, s)
            oracle_min = np.linalg.eigvalsh(direct_inverse(signals[:i], 1.0))[0]
            assert np.linalg.eigvalsh(p.matrix())[0] > oracle_min - 1e-9

    def test_quadratic_cost_scaling(self):
        # timing slope across d in {50,100,200,400}: an O(d^2) update should
        # grow far slower than the d^3 ratio (512x across the span)
        def per_update(dim, reps=10):
            rng = np.random.default_rng(dim)
            p = sqrt_init(rng.standard_normal(dim), 10.0)
            sigs = rng.standard_normal((reps, dim))
            best = math.inf
            for _ in range(3):
                t0 = time.perf_counter()
                for s in sigs:
                    p.update(s)
                best = min(best, (time.perf_counter() - t0) / reps)
            return best

        times = {d: per_update(d) for d in (50, 100, 200, 400)}
        assert times[400] / times[50] < 180.0  # d^2 predicts 64x, d^3 512x
        assert times[400] / times[200] < 10.0  # d^2 predicts 4x, d^3 8x


class TestSqrtUpdateGeneral:
    def test_zero_signal_pure_rescale(self):
        p = sqrt_init(np.ones(3), 2.0)
        R_before = p.R.copy()
        sqrt_update_general(p, np.zeros(3), 0.36)
        assert np.allclose(p.R, R_before / math.sqrt(1.0 - 0.36), rtol=0, atol=1e-15)

    def test_matches_direct_recursion(self):
        rng = np.random.default_rng(5)
        d, lam = 6, 3.0
        s0 = rng.standard_normal(d)
        p = sqrt_init(s0, lam)
        F = np.outer(s0, s0) + lam * np.eye(d)
        for _ in range(150):
            gamma = rng.uniform(0.05, 0.9)
            s = rng.standard_normal(d)
            sqrt_update_general(p, s, gamma)
            F = (1.0 - gamma) * F + gamma * np.outer(s, s)
            assert rel_fro(p.matrix(), np.linalg.inv(F)) < 1e-8

    def test_harmonic_rates_recover_plain_recursion_up_to_scale(self):
        # gamma_n = 1/(n+1) keeps the equally-weighted average, so the
        # tracked inverse is n times the undivided-sum inverse
        rng = np.random.default_rng(6)
        signals = rng.standard_normal((60, 5))
        pg = sqrt_init(signals[0], 10.0)
        ps = sqrt_init(signals[0], 10.0)
        for n, s in enumerate(signals[1:], start=1):
            sqrt_update_general(pg, s, 1.0 / (n + 1))
            sqrt_update(ps, s)
        n = signals.shape[0]
        assert rel_fro(pg.matrix(), n * ps.matrix()) < 1e-8

    def test_scalar_half_rate(self):
        # d=1: F1 = s1^2 + lam; F2 = 0.5 F1 + 0.5 s2^2; R2^2 = 1/F2
        s1, s2, lam = 1.5, -0.7, 2.0
        p = sqrt_init(np.array([s1]), lam)
        sqrt_update_general(p, np.array([s2]), 0.5)
        expected = 1.0 / (0.5 * (s1**2 + lam) + 0.5 * s2**2)
        assert p.matrix()[0, 0] == pytest.approx(expected, rel=1e-12)

    @pytest.mark.parametrize("gamma", [0.0, 1.0, -0.3, 1.7])
    def test_rejects_rates_outside_unit_interval(self, gamma):
        p = sqrt_init(np.ones(2), 1.0)
        with pytest.raises(InvalidParameterError):
            sqrt_update_general(p, np.ones(2), gamma)


class TestWoodbury:
    def test_identity_with_basis_vector(self):
        out = woodbury_update(np.eye(4), np.array([1.0, 0, 0, 0]))
        assert np.allclose(out, np.diag([0.5, 1, 1, 1]), atol=1e-15)

    def test_zero_signal_noop(self):
        A = np.diag([2.0, 3.0])
        assert np.array_equal(woodbury_update(A, np.zeros(2)), A)

    def test_matches_dense_inverse(self):
        rng = np.random.default_rng(7)
        from helpers import random_spd

        A = random_spd(rng, 9)
        s = rng.standard_normal(9)
        oracle = np.linalg.inv(np.linalg.inv(A) + np.outer(s, s))
        assert rel_fro(woodbury_update(A, s), oracle) < 1e-10


class TestPairedEstimator:
    def test_scalar_two_signals(self):
        # s1=0, s2=2, lam=1: A2 = 1/(0.5*4 + 1) = 1/3
        est = PairedEstimator(1, 1.0)
        est.update([0.0])
        paired_update(est, [2.0])
        assert est.matrix()[0, 0] == pytest.approx(1.0 / 3.0, rel=1e-12)

    def test_first_signal_only_seeds_mean(self):
        est = PairedEstimator(3, 1.0)
        with pytest.raises(InvalidParameterError):
            paired_update(est, np.ones(3))
        est.update(np.ones(3))
        assert est.n == 1
        assert np.array_equal(est.mean, np.ones(3))
        assert np.array_equal(est.R, np.eye(3))

    def test_constant_signals_collapse_to_damping(self):
        lam, n = 2.0, 60
        est = PairedEstimator(4, lam)
        c = np.array([1.0, -2.0, 0.5, 3.0])
        for _ in range(n):
            est.update(c)
        expected = ((n - 1) / lam) * np.eye(4)
        assert rel_fro(est.matrix(), expected) < 1e-10

    def test_mean_is_running_average(self):
        rng = np.random.default_rng(8)
        signals = rng.standard_normal((73, 5))
        est = PairedEstimator(5, 10.0)
        for i, s in enumerate(signals, start=1):
            est.update(s)
            assert np.max(np.abs(est.mean - signals[:i].mean(axis=0))) < 1e-12

    def test_matches_centered_covariance_inverse(self):
        rng = np.random.default_rng(9)
        signals = rng.standard_normal((100, 10)) * np.linspace(0.3, 3.0, 10)
        lam = 10.0
        est = PairedEstimator(10, lam)
        for s in signals:
            est.update(s)
        n = signals.shape[0]
        centered = signals - signals.mean(axis=0)
        oracle = np.linalg.inv(
            centered.T @ centered / (n - 1) + lam / (n - 1) * np.eye(10)
        )
        assert rel_fro(est.matrix(), oracle) < 1e-8

    def test_rejects_non_finite(self):
        est = PairedEstimator(2, 1.0)
        est.update(np.zeros(2))
        with pytest.raises(InvalidSignalError):
            est.update(np.array([np.inf, 0.0]))


class TestNormalizedMatrix:
    def test_multiple_of_identity(self):
        assert np.allclose(normalized_matrix(5.0 * np.eye(4)), np.eye(4), atol=1e-15)

    def test_diagonal_arithmetic(self):
        out = normalized_matrix(np.diag([1.0, 3.0]))
        assert np.allclose(out, np.diag([0.5, 1.5]), atol=1e-15)

    @given(st.floats(min_value=1e-6, max_value=1e6))
    def test_scale_invariance(self, k):
        B = np.array([[2.0, 0.3], [0.3, 1.0]])
        assert np.allclose(normalized_matrix(k * B), normalized_matrix(B), rtol=1e-12)

    def test_rejects_nonpositive_trace(self):
        with pytest.raises(InvalidParameterError):
            normalized_matrix(-np.eye(3))


class TestRankOneRootIdentity:
    @settings(max_examples=200, deadline=None)
    @given(st.integers(1, 8), st.integers(0, 2**32 - 1))
    def test_root_of_identity_minus_outer(self, dim, seed):
        # (I - r z z^T)(I - r z z^T)^T == I - z z^T for r = 1/(1+sqrt(1-z.z))
        rng = np.random.default_rng(seed)
        z = rng.standard_normal(dim)
        norm2 = float(z @ z)
        if norm2 > 1.0:
            z = z / math.sqrt(norm2) * rng.uniform(0.0, 1.0)
        zz = float(z @ z)
        r = 1.0 / (1.0 + math.sqrt(1.0 - zz))
        root = np.eye(dim) - r * np.outer(z, z)
        assert np.max(np.abs(root @ root.T - (np.eye(dim) - np.outer(z, z)))) < 1e-12


def test_oracle_equivalence_random_dims():
    rng = np.random.default_rng(10)
    for _ in range(8):
        d = int(rng.integers(2, 15))
        n = int(rng.integers(2, 120))
        lam = float(rng.choice([1.0, 10.0]))
        signals = rng.standard_normal((n, d)) * rng.uniform(0.2, 3.0, size=d)
        p = sqrt_init(signals[0], lam)
        A = direct_inverse(signals[:1], lam)
        for s in signals[1:]:
            sqrt_update(p, s)
            A = woodbury_update(A, s)
        direct = direct_inverse(signals, lam)
        assert rel_fro(p.matrix(), direct) < 1e-8
        assert rel_fro(A, direct) < 1e-8
        assert rel_fro(p.matrix(), A) < 1e-8

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rtmbe.integrator import DiscreteDynamics
from rtmbe.ukf import (
    CholeskyFailure,
    GaussianBelief,
    LengthMismatch,
    SingularInnovation,
    UkfFilter,
    UtConfig,
    sigma_points,
)

from conftest import random_psd
from kalman_oracle import kalman_forward, random_linear_system, simulate_linear


def linear_filter(A, B, H, Q, R, x0, P0, ts=1.0):
    """UKF instance over an exactly linear discrete map."""
    dyn = DiscreteDynamics(lambda x, u, p, t: A @ x + B @ u, ts=ts)
    return UkfFilter(dyn, lambda x: H @ x, Q, R, GaussianBelief(x0, P0))


class TestSigmaPoints:
    def test_two_dimensional_worked_example(self):
        sp = sigma_points(GaussianBelief(np.zeros(2), np.eye(2)), UtConfig())
        s = math.sqrt(2.0)
        np.testing.assert_allclose(
            sp.points, [[0, 0], [s, 0], [0, s], [-s, 0], [0, -s]], atol=1e-15
        )
        np.testing.assert_allclose(sp.wm, [0.0, 0.25, 0.25, 0.25, 0.25], atol=0)
        np.testing.assert_allclose(sp.wc, [0.0, 0.25, 0.25, 0.25, 0.25], atol=0)

    def test_first_point_is_mean_and_symmetry(self):
        rng = np.random.default_rng(11)
        mean = rng.standard_normal(4)
        sp = sigma_points(GaussianBelief(mean, random_psd(rng, 4, floor=0.1)), UtConfig())
        np.testing.assert_array_equal(sp.points[0], mean)
        for i in range(1, 5):
            np.testing.assert_allclose(sp.points[i] + sp.points[i + 4], 2 * mean, atol=1e-12)

    def test_mean_weights_sum_to_one(self):
        wm, wc = UtConfig().weights(4)
        assert wm.sum() == pytest.approx(1.0, abs=1e-15)
        wm2, _ = UtConfig(alpha=0.5, beta=2.0, kappa=1.0).weights(3)
        assert wm2.sum() == pytest.approx(1.0, abs=1e-12)

    def test_reconstruction_identity(self):
        rng = np.random.default_rng(42)
        for _ in range(100):
            mean = rng.standard_normal(4) * 3
            cov = random_psd(rng, 4)
            sp = sigma_points(GaussianBelief(mean, cov), UtConfig())
            np.testing.assert_allclose(sp.wm @ sp.points, mean, atol=1e-12)
            d = sp.points - sp.wm @ sp.points
            np.testing.assert_allclose((sp.wc[:, None] * d).T @ d, cov, atol=1e-12)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(min_value=0, max_value=2**32 - 1), st.integers(min_value=1, max_value=6))
    def test_reconstruction_identity_any_dimension(self, seed, n):
        rng = np.random.default_rng(seed)
        mean = rng.standard_normal(n)
        cov = random_psd(rng, n, floor=1e-3)
        sp = sigma_points(GaussianBelief(mean, cov), UtConfig())
        np.testing.assert_allclose(sp.wm @ sp.points, mean, atol=1e-12)
        d = sp.points - mean
        np.testing.assert_allclose((sp.wc[:, None] * d).T @ d, cov, atol=1e-11)

    def test_negative_eigenvalue_raises_after_jitter(self):
        rng = np.random.default_rng(5)
        Qm, _ = np.linalg.qr(rng.standard_normal((4, 4)))
        cov = Qm @ np.diag([1.0, 1.0, 1.0, -1e-6]) @ Qm.T
        with pytest.raises(CholeskyFailure):
            sigma_points(GaussianBelief(np.zeros(4), cov), UtConfig())

    def test_roundoff_indefiniteness_rescued_by_jitter(self):
        rng = np.random.default_rng(6)
        Qm, _ = np.linalg.qr(rng.standard_normal((4, 4)))
        cov = Qm @ np.diag([1.0, 1.0, 1.0, -1e-14]) @ Qm.T
        sp = sigma_points(GaussianBelief(np.zeros(4), cov), UtConfig())
        assert np.isfinite(sp.points).all()

    def test_scale_must_be_positive(self):
        with pytest.raises(ValueError, match="lambda"):
            sigma_points(GaussianBelief(np.zeros(4), np.eye(4)), UtConfig(alpha=0.0))


class TestPredict:
    def test_identity_dynamics_zero_noise_keeps_belief(self):
        rng = np.random.default_rng(1)
        x0, P0 = rng.standard_normal(4), random_psd(rng, 4, floor=0.1)
        kf = linear_filter(np.eye(4), np.zeros((4, 1)), np.eye(4), np.zeros((4, 4)), np.eye(4), x0, P0)
        kf.predict(np.zeros(1))
        np.testing.assert_allclose(kf.belief.mean, x0, atol=1e-12)
        np.testing.assert_allclose(kf.belief.cov, P0, atol=1e-12)

    def test_linear_dynamics_match_matrix_arithmetic(self):
        rng = np.random.default_rng(2)
        A = rng.standard_normal((4, 4)) * 0.5
        B = rng.standard_normal((4, 2))
        Q = random_psd(rng, 4, scale=0.3)
        x0, P0 = rng.standard_normal(4), random_psd(rng, 4, floor=0.05)
        u = rng.standard_normal(2)
        kf = linear_filter(A, B, np.eye(4), Q, np.eye(4), x0, P0)
        kf.predict(u)
        np.testing.assert_allclose(kf.belief.mean, A @ x0 + B @ u, atol=1e-10)
        np.testing.assert_allclose(kf.belief.cov, A @ P0 @ A.T + Q, atol=1e-10)

    def test_identity_dynamics_additive_noise(self):
        rng = np.random.default_rng(3)
        x0, P0 = rng.standard_normal(4), random_psd(rng, 4, floor=0.1)
        kf = linear_filter(np.eye(4), np.zeros((4, 1)), np.eye(4), np.eye(4), np.eye(4), x0, P0)
        kf.predict(np.zeros(1))
        np.testing.assert_allclose(kf.belief.cov, P0 + np.eye(4), atol=1e-12)

    def test_advances_clock_by_sample_time(self):
        kf = linear_filter(np.eye(4), np.zeros((4, 1)), np.eye(4), np.eye(4), np.eye(4), np.zeros(4), np.eye(4), ts=0.25)
        kf.predict(np.zeros(1))
        kf.predict(np.zeros(1))
        assert kf.t == 0.5


class TestCorrect:
    def test_scalar_update_matches_closed_form(self):
        # posterior of N(0,1) prior with unit-noise identity observation y=1:
        # mean 1/2, variance 1/2; ll = -(0.5 + log 2 + log 2pi)/2
        kf = UkfFilter(
            DiscreteDynamics(lambda x, u, p, t: x, ts=1.0),
            lambda x: x,
            Q=np.zeros((1, 1)),
            R=np.eye(1),
            belief=GaussianBelief(np.zeros(1), np.eye(1)),
        )
        ll = kf.correct(np.zeros(1), np.array([1.0]))
        assert kf.belief.mean[0] == pytest.approx(0.5, abs=1e-12)
        assert kf.belief.cov[0, 0] == pytest.approx(0.5, abs=1e-12)
        assert ll == pytest.approx(-0.5 * (0.5 + math.log(2.0) + math.log(2.0 * math.pi)), abs=1e-12)

    def test_zero_innovation_keeps_mean(self):
        rng = np.random.default_rng(4)
        x0, P0 = rng.standard_normal(4), random_psd(rng, 4, floor=0.1)
        R = random_psd(rng, 4, floor=0.2)
        kf = linear_filter(np.eye(4), np.zeros((4, 1)), np.eye(4), np.eye(4), R, x0, P0)
        sp = sigma_points(kf.belief, kf.ut)
        yhat = sp.wm @ sp.points
        ll = kf.correct(np.zeros(1), yhat)
        np.testing.assert_allclose(kf.belief.mean, x0, atol=1e-12)
        d = sp.points - yhat
        S = (sp.wc[:, None] * d).T @ d + R
        _, logdet = np.linalg.slogdet(S)
        assert ll == pytest.approx(-0.5 * (logdet + 4 * math.log(2 * math.pi)), abs=1e-10)

    def test_linear_observation_matches_exact_kalman_correction(self):
        rng = np.random.default_rng(8)
        A, B, H, Q, R, x0, P0 = random_linear_system(rng)
        y = rng.standard_normal(4)
        kf = linear_filter(A, B, H, Q, R, x0, P0)
        ll = kf.correct(np.zeros(2), y)
        # one oracle correction step (N=1 with no predict contribution)
        xf, Pf, _, _, ll_exact = kalman_forward(np.eye(4), np.zeros((4, 2)), H, np.zeros((4, 4)), R, x0, P0, np.zeros((1, 2)), y[None, :])
        np.testing.assert_allclose(kf.belief.mean, xf[0], atol=1e-10)
        np.testing.assert_allclose(kf.belief.cov, Pf[0], atol=1e-10)
        assert ll == pytest.approx(ll_exact, rel=1e-10)

    def test_singular_innovation_detected(self):
        # sigma points degenerate to non-finite observations -> S cannot be
        # factorized and the failure must be signalled, not propagated as NaN
        kf = UkfFilter(
            DiscreteDynamics(lambda x, u, p, t: x, ts=1.0),
            lambda x: np.full_like(x, np.nan),
            Q=np.zeros((2, 2)),
            R=np.eye(2),
            belief=GaussianBelief(np.zeros(2), np.eye(2)),
        )
        with pytest.raises(SingularInnovation):
            kf.correct(np.zeros(1), np.zeros(2))

    def test_requires_positive_definite_R(self):
        with pytest.raises(ValueError, match="positive-definite"):
            UkfFilter(
                DiscreteDynamics(lambda x, u, p, t: x, ts=1.0),
                lambda x: x,
                Q=np.zeros((2, 2)),
                R=np.zeros((2, 2)),
                belief=GaussianBelief(np.zeros(2), np.eye(2)),
            )


class TestForwardTrajectory:
    def test_empty_sequences(self):
        kf = linear_filter(np.eye(4), np.zeros((4, 2)), np.eye(4), np.eye(4), np.eye(4), np.zeros(4), np.eye(4))
        sol = kf.forward_trajectory([], [])
        assert len(sol) == 0
        assert sol.ll == 0.0

    def test_length_mismatch_rejected(self):
        kf = linear_filter(np.eye(4), np.zeros((4, 2)), np.eye(4), np.eye(4), np.eye(4), np.zeros(4), np.eye(4))
        with pytest.raises(LengthMismatch, match="Data-length mismatch"):
            kf.forward_trajectory(np.zeros((3, 2)), np.zeros((2, 4)))

    def test_matches_exact_kalman_filter_on_linear_system(self):
        rng = np.random.default_rng(1234)
        A, B, H, Q, R, x0, P0 = random_linear_system(rng)
        us, ys = simulate_linear(rng, A, B, H, Q, R, x0, N=100)
        kf = linear_filter(A, B, H, Q, R, x0, P0)
        sol = kf.forward_trajectory(us, ys)
        xf, Pf, xp, Pp, ll = kalman_forward(A, B, H, Q, R, x0, P0, us, ys)
        scale = np.abs(xf).max()
        assert np.abs(sol.filtered_means - xf).max() / scale < 1e-8
        assert np.abs(sol.filtered_covs - Pf).max() / np.abs(Pf).max() < 1e-8
        assert np.abs(sol.predicted_means - xp).max() / scale < 1e-8
        assert np.abs(sol.predicted_covs - Pp).max() / np.abs(Pp).max() < 1e-8
        assert sol.ll == pytest.approx(ll, rel=1e-8)

    def test_ll_decomposes_into_step_increments(self):
        rng = np.random.default_rng(77)
        A, B, H, Q, R, x0, P0 = random_linear_system(rng)
        us, ys = simulate_linear(rng, A, B, H, Q, R, x0, N=30)
        kf = linear_filter(A, B, H, Q, R, x0, P0)
        sol = kf.forward_trajectory(us, ys)
        kf2 = linear_filter(A, B, H, Q, R, x0, P0)
        total = 0.0
        for k in range(30):
            total += kf2.correct(us[k], ys[k])
            kf2.predict(us[k])
        assert sol.ll == pytest.approx(total, abs=1e-12)

    def test_deterministic_bit_identical(self):
        rng = np.random.default_rng(9)
        A, B, H, Q, R, x0, P0 = random_linear_system(rng)
        us, ys = simulate_linear(rng, A, B, H, Q, R, x0, N=25)
        sol1 = linear_filter(A, B, H, Q, R, x0, P0).forward_trajectory(us, ys)
        sol2 = linear_filter(A, B, H, Q, R, x0, P0).forward_trajectory(us, ys)
        assert sol1.ll == sol2.ll
        assert np.array_equal(sol1.filtered_means, sol2.filtered_means)
        assert np.array_equal(sol1.filtered_covs, sol2.filtered_covs)

    def test_covariances_stay_symmetric(self):
        rng = np.random.default_rng(10)
        A, B, H, Q, R, x0, P0 = random_linear_system(rng)
        us, ys = simulate_linear(rng, A, B, H, Q, R, x0, N=50)
        kf = linear_filter(A, B, H, Q, R, x0, P0)
        for k in range(50):
            kf.correct(us[k], ys[k])
            c = kf.belief.cov
            assert np.abs(c - c.T).max() <= 1e-12
            kf.predict(us[k])
            c = kf.belief.cov
            assert np.abs(c - c.T).max() <= 1e-12

    def test_numerical_failure_reports_step_index(self):
        # belief collapses to an exact point (R tiny, Q = 0) until the
        # innovation factorization gives out; the step index must be named
        dyn = DiscreteDynamics(lambda x, u, p, t: np.full_like(x, np.nan), ts=1.0)
        kf = UkfFilter(dyn, lambda x: x, np.zeros((2, 2)), np.eye(2), GaussianBelief(np.zeros(2), np.eye(2)))
        with pytest.raises((CholeskyFailure, SingularInnovation), match="step 1"):
            kf.forward_trajectory(np.zeros((3, 1)), np.zeros((3, 2)))

    def test_solution_length_matches_input(self):
        kf = linear_filter(np.eye(4), np.zeros((4, 2)), np.eye(4), np.eye(4), np.eye(4), np.zeros(4), np.eye(4))
        sol = kf.forward_trajectory(np.zeros((7, 2)), np.zeros((7, 4)))
        assert len(sol) == 7
        assert sol.filtered_means.shape == (7, 4)
        assert sol.predicted_covs.shape == (7, 4, 4)

"""Unscented Kalman Filter with additive Gaussian noise.

Implements the scaled symmetric sigma-point transform, the predict and
correct steps, and whole-trajectory filtering with accumulated
log-likelihood.  Conventions fixed here:

* Within :meth:`UkfFilter.forward_trajectory`, each step corrects with the
  measurement first and then predicts forward, so the accumulated ``ll`` is
  the one-step-ahead predictive log-likelihood of the data and the initial
  belief serves as the first prediction.
* Noise is additive: the process covariance ``Q`` is added after sigma-point
  propagation and the measurement covariance ``R`` is added to the
  innovation covariance.
* Covariances are re-symmetrized after every update.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_solve

from .integrator import DiscreteDynamics

# Jitter ladder tried on the covariance diagonal when a Cholesky
# factorization fails; exhaustion signals genuine filter divergence.
_CHOLESKY_JITTERS = (1e-12, 1e-10, 1e-8)

_LOG_2PI = math.log(2.0 * math.pi)


class FilterNumericsError(RuntimeError):
    """Base class for numerical failures inside the filter."""


class CholeskyFailure(FilterNumericsError):
    """Belief covariance is not numerically PSD even after jitter."""


class SingularInnovation(FilterNumericsError):
    """Innovation covariance cannot be factorized (not invertible)."""


class LengthMismatch(ValueError):
    """Input and measurement trajectories have different lengths."""


@dataclass
class GaussianBelief:
    """Mean and covariance of a Gaussian state estimate."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=np.float64)
        self.cov = np.asarray(self.cov, dtype=np.float64)
        n = self.mean.shape[0]
        if self.mean.ndim != 1 or self.cov.shape != (n, n):
            raise ValueError(f"inconsistent belief shapes: mean {self.mean.shape}, cov {self.cov.shape}")

    def copy(self) -> "GaussianBelief":
        return GaussianBelief(self.mean.copy(), self.cov.copy())


@dataclass(frozen=True)
class UtConfig:
    """Scaled unscented-transform parameters.

    The defaults (alpha=1, beta=0, kappa=0) give lambda = 0: zero weight on
    the central point and equal weights 1/(2n) elsewhere, a numerically safe
    choice with no negative covariance weights.
    """

    alpha: float = 1.0
    beta: float = 0.0
    kappa: float = 0.0

    def lam(self, n: int) -> float:
        return self.alpha * self.alpha * (n + self.kappa) - n

    def weights(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        """Mean and covariance weights for dimension ``n``."""
        lam = self.lam(n)
        scale = n + lam
        if scale <= 0.0:
            raise ValueError(f"n + lambda must be positive, got {scale!r} for n={n}")
        wm = np.full(2 * n + 1, 1.0 / (2.0 * scale))
        wm[0] = lam / scale
        wc = wm.copy()
        wc[0] = wm[0] + (1.0 - self.alpha * self.alpha + self.beta)
        return wm, wc


@dataclass
class SigmaPointSet:
    """2n+1 sigma points (rows of ``points``) with their weights."""

    points: np.ndarray  # shape (2n+1, n); points[0] is the mean
    wm: np.ndarray
    wc: np.ndarray


def _try_cholesky(M: np.ndarray) -> np.ndarray | None:
    # LAPACK can report success on matrices containing NaNs, so a finite
    # factor is part of the success criterion.
    try:
        L = np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        return None
    return L if np.isfinite(L).all() else None


def _cholesky_with_jitter(cov: np.ndarray, scale: float) -> np.ndarray:
    """Lower Cholesky factor of ``scale*cov``, retrying with diagonal jitter."""
    L = _try_cholesky(scale * cov)
    if L is not None:
        return L
    eye = np.eye(cov.shape[0])
    for eps in _CHOLESKY_JITTERS:
        L = _try_cholesky(scale * (cov + eps * eye))
        if L is not None:
            return L
    raise CholeskyFailure(
        f"covariance not positive-semidefinite after jitter up to {_CHOLESKY_JITTERS[-1]:g}"
    )


def sigma_points(belief: GaussianBelief, cfg: UtConfig) -> SigmaPointSet:
    """Symmetric 2n+1 sigma-point set for a Gaussian belief.

    ``points[0]`` is the mean; ``points[i]`` and ``points[i+n]`` are
    ``mean +/- column i of L`` where ``L @ L.T = (n + lambda) * cov``.
    Raises :class:`CholeskyFailure` if the covariance is not numerically
    PSD after the jitter ladder.
    """
    n = belief.mean.shape[0]
    wm, wc = cfg.weights(n)
    lam = cfg.lam(n)
    L = _cholesky_with_jitter(belief.cov, n + lam)
    pts = np.empty((2 * n + 1, n))
    pts[0] = belief.mean
    pts[1 : n + 1] = belief.mean + L.T
    pts[n + 1 :] = belief.mean - L.T
    return SigmaPointSet(pts, wm, wc)


@dataclass
class FilterSolution:
    """Per-step filtered and predicted beliefs plus total log-likelihood."""

    filtered_means: np.ndarray  # (N, n)
    filtered_covs: np.ndarray  # (N, n, n)
    predicted_means: np.ndarray
    predicted_covs: np.ndarray
    ll: float

    def __len__(self) -> int:
        return self.filtered_means.shape[0]


class UkfFilter:
    """UKF over a discrete dynamics map with an additive-noise measurement.

    Single-writer: :meth:`predict` and :meth:`correct` mutate the carried
    belief and must not be called concurrently on one instance.
    """

    def __init__(
        self,
        dynamics: DiscreteDynamics,
        measurement,
        Q: np.ndarray,
        R: np.ndarray,
        belief: GaussianBelief,
        ut: UtConfig = UtConfig(),
        params=None,
        t: float = 0.0,
    ):
        n = belief.mean.shape[0]
        Q = np.asarray(Q, dtype=np.float64)
        R = np.asarray(R, dtype=np.float64)
        if Q.shape != (n, n):
            raise ValueError(f"Q must be {n}x{n}, got {Q.shape}")
        if R.ndim != 2 or R.shape[0] != R.shape[1]:
            raise ValueError(f"R must be square, got {R.shape}")
        for name, M in (("Q", Q), ("R", R)):
            if np.abs(M - M.T).max() > 1e-12:
                raise ValueError(f"{name} must be symmetric")
        try:
            np.linalg.cholesky(R)
        except np.linalg.LinAlgError:
            raise ValueError("R must be strictly positive-definite") from None

        self.dynamics = dynamics
        self.measurement = measurement
        self.Q = Q
        self.R = R
        self.ut = ut
        self.belief = belief.copy()
        self.params = params
        self.t = float(t)
        self._ny = R.shape[0]

    def predict(self, u) -> None:
        """Propagate the belief one sample forward under input ``u``."""
        sp = sigma_points(self.belief, self.ut)
        prop = np.empty_like(sp.points)
        for i in range(sp.points.shape[0]):
            prop[i] = self.dynamics(sp.points[i], u, self.params, self.t)
        mean = sp.wm @ prop
        d = prop - mean
        cov = (sp.wc[:, None] * d).T @ d + self.Q
        cov = 0.5 * (cov + cov.T)
        self.belief = GaussianBelief(mean, cov)
        self.t += self.dynamics.ts

    def correct(self, u, y) -> float:
        """Condition the belief on measurement ``y``; returns the
        log-likelihood increment of ``y`` under the predicted measurement
        density.  ``u`` is accepted for interface symmetry with
        :meth:`predict`; the measurement map takes the state only.
        """
        y = np.asarray(y, dtype=np.float64)
        sp = sigma_points(self.belief, self.ut)
        npts = sp.points.shape[0]
        Y = np.empty((npts, self._ny))
        for i in range(npts):
            Y[i] = self.measurement(sp.points[i])
        yhat = sp.wm @ Y
        dy = Y - yhat
        S = (sp.wc[:, None] * dy).T @ dy + self.R
        S = 0.5 * (S + S.T)
        dx = sp.points - self.belief.mean
        C = (sp.wc[:, None] * dx).T @ dy
        Ls = _try_cholesky(S)
        if Ls is None:
            raise SingularInnovation(
                "innovation covariance is not invertible (degenerate or non-finite)"
            )
        K = cho_solve((Ls, True), C.T, check_finite=False).T
        nu = y - yhat
        alpha = cho_solve((Ls, True), nu, check_finite=False)
        mean = self.belief.mean + K @ nu
        cov = self.belief.cov - K @ S @ K.T
        cov = 0.5 * (cov + cov.T)
        logdet = 2.0 * np.sum(np.log(np.diag(Ls)))
        ll_inc = -0.5 * (nu @ alpha + logdet + self._ny * _LOG_2PI)
        self.belief = GaussianBelief(mean, cov)
        return float(ll_inc)

    def forward_trajectory(self, us, ys) -> FilterSolution:
        """Filter a whole input/measurement trajectory.

        For each step k: record the predicted belief, correct with
        ``(us[k], ys[k])`` accumulating the log-likelihood, record the
        filtered belief, then predict with ``us[k]``.
        """
        N = len(us)
        if N != len(ys):
            raise LengthMismatch(
                f"Data-length mismatch: {N} inputs vs {len(ys)} measurements"
            )
        n = self.belief.mean.shape[0]
        if N > 0:
            us = np.asarray(us, dtype=np.float64).reshape(N, -1)
            ys = np.asarray(ys, dtype=np.float64).reshape(N, -1)
        xf_mean = np.empty((N, n))
        xf_cov = np.empty((N, n, n))
        xp_mean = np.empty((N, n))
        xp_cov = np.empty((N, n, n))
        ll = 0.0
        for k in range(N):
            xp_mean[k] = self.belief.mean
            xp_cov[k] = self.belief.cov
            try:
                ll += self.correct(us[k], ys[k])
                xf_mean[k] = self.belief.mean
                xf_cov[k] = self.belief.cov
                self.predict(us[k])
            except FilterNumericsError as e:
                raise type(e)(f"step {k}: {e}") from e
        return FilterSolution(xf_mean, xf_cov, xp_mean, xp_cov, float(ll))

"""Compiled hot path for whole-trajectory CSTR filtering.

The generic :class:`rtmbe.ukf.UkfFilter` accepts arbitrary dynamics and
measurement callables; that flexibility costs far too much per step for the
real-time budget of the command-line filter.  This module specializes the
exact same filter recursion (same sigma-point construction, same jitter
ladder, same update formulas, correct-then-predict order) to the CSTR model
with its identity measurement map, as one numba-compiled kernel with
preallocated scratch: no per-step allocation, roughly three orders of
magnitude faster than the generic path on a desktop machine.

Equivalence with the generic filter is asserted by the test suite.  When
numba is unavailable the public entry point transparently falls back to the
generic implementation.
"""

from __future__ import annotations

import math

import numpy as np

try:
    from numba import njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - exercised only without numba
    NUMBA_AVAILABLE = False

    def njit(*args, **kwargs):
        def deco(fn):
            return fn

        return deco

from .dynamics import ModelParameters, cstr_derivative, cstr_measurement
from .integrator import discretize
from .ukf import (
    CholeskyFailure,
    FilterSolution,
    GaussianBelief,
    LengthMismatch,
    SingularInnovation,
    UkfFilter,
    UtConfig,
    _CHOLESKY_JITTERS,
)

_LOG_2PI = math.log(2.0 * math.pi)

_STATUS_OK = 0
_STATUS_CHOLESKY = 1
_STATUS_SINGULAR = 2


@njit(cache=True)
def _rhs(x, F, Qd, pv, out):
    # pv holds ModelParameters.as_array(): k10 k20 k30 E1 E2 E3 dH1 dH2 dH3
    # rho Cp kwAR VR mK CpK cA0 Tin
    cA = x[0]
    cB = x[1]
    TR = x[2]
    TK = x[3]
    TRK = TR + 273.15
    k1 = pv[0] * math.exp(pv[3] / TRK)
    k2 = pv[1] * math.exp(pv[4] / TRK)
    k3 = pv[2] * math.exp(pv[5] / TRK)
    r1 = k1 * cA
    r2 = k2 * cB
    r3 = k3 * cA * cA
    rho_cp = pv[9] * pv[10]
    out[0] = F * (pv[15] - cA) - r1 - r3
    out[1] = -F * cB + r1 - r2
    out[2] = (
        F * (pv[16] - TR)
        + pv[11] / (rho_cp * pv[12]) * (TK - TR)
        - (r1 * pv[6] + r2 * pv[7] + r3 * pv[8]) / rho_cp
    )
    out[3] = (Qd + pv[11] * (TR - TK)) / (pv[13] * pv[14])


@njit(cache=True)
def _chol_lower(A, L):
    # Textbook lower Cholesky; returns False on a nonpositive or
    # non-finite pivot instead of raising.
    n = A.shape[0]
    for i in range(n):
        for j in range(i + 1):
            s = A[i, j]
            for q in range(j):
                s -= L[i, q] * L[j, q]
            if not math.isfinite(s):
                return False
            if i == j:
                if not (s > 0.0):
                    return False
                L[i, i] = math.sqrt(s)
            else:
                L[i, j] = s / L[j, j]
    for i in range(n):
        for j in range(i + 1, n):
            L[i, j] = 0.0
    return True


@njit(cache=True)
def _chol_scaled_jitter(P, scale, L, A, jitters):
    # Factor scale*P, retrying with scale*(P + eps*I) down the jitter ladder.
    n = P.shape[0]
    for i in range(n):
        for j in range(n):
            A[i, j] = scale * P[i, j]
    if _chol_lower(A, L):
        return True
    for e in range(jitters.shape[0]):
        eps = jitters[e]
        for i in range(n):
            for j in range(n):
                A[i, j] = scale * (P[i, j] + (eps if i == j else 0.0))
        if _chol_lower(A, L):
            return True
    return False


@njit(cache=True)
def _cho_solve_vec(L, b, out):
    # Solve (L L^T) out = b by forward then backward substitution.
    n = L.shape[0]
    for i in range(n):
        s = b[i]
        for q in range(i):
            s -= L[i, q] * out[q]
        out[i] = s / L[i, i]
    for i in range(n - 1, -1, -1):
        s = out[i]
        for q in range(i + 1, n):
            s -= L[q, i] * out[q]
        out[i] = s / L[i, i]


@njit(cache=True)
def _sigma_points_into(m, L, pts):
    n = m.shape[0]
    for j in range(n):
        pts[0, j] = m[j]
    for i in range(n):
        for j in range(n):
            pts[1 + i, j] = m[j] + L[j, i]
            pts[1 + n + i, j] = m[j] - L[j, i]


@njit(cache=True)
def _forward_cstr(x0, P0, Qc, Rc, us, ys, pv, ts, substeps, wm, wc, scale, jitters):
    n = 4
    npts = 2 * n + 1
    N = us.shape[0]
    xf_m = np.empty((N, n))
    xf_c = np.empty((N, n, n))
    xp_m = np.empty((N, n))
    xp_c = np.empty((N, n, n))

    m = x0.copy()
    P = P0.copy()
    L = np.empty((n, n))
    LS = np.empty((n, n))
    A = np.empty((n, n))
    pts = np.empty((npts, n))
    yhat = np.empty(n)
    S = np.empty((n, n))
    C = np.empty((n, n))
    K = np.empty((n, n))
    KS = np.empty((n, n))
    newP = np.empty((n, n))
    nu = np.empty(n)
    alpha = np.empty(n)
    z = np.empty(n)
    xcur = np.empty(n)
    xt = np.empty(n)
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)

    h = ts / substeps
    ll = 0.0

    for k in range(N):
        F = us[k, 0]
        Qd = us[k, 1]

        for i in range(n):
            xp_m[k, i] = m[i]
            for j in range(n):
                xp_c[k, i, j] = P[i, j]

        # ---- correct with measurement k (identity observation map)
        if not _chol_scaled_jitter(P, scale, L, A, jitters):
            return xf_m, xf_c, xp_m, xp_c, ll, _STATUS_CHOLESKY, k
        _sigma_points_into(m, L, pts)

        for i in range(n):
            s = 0.0
            for q in range(npts):
                s += wm[q] * pts[q, i]
            yhat[i] = s
        for i in range(n):
            for j in range(n):
                s_yy = 0.0
                s_xy = 0.0
                for q in range(npts):
                    dyi = pts[q, i] - yhat[i]
                    dyj = pts[q, j] - yhat[j]
                    dxi = pts[q, i] - m[i]
                    s_yy += wc[q] * dyi * dyj
                    s_xy += wc[q] * dxi * dyj
                S[i, j] = s_yy + Rc[i, j]
                C[i, j] = s_xy
        for i in range(n):
            for j in range(i + 1, n):
                v = 0.5 * (S[i, j] + S[j, i])
                S[i, j] = v
                S[j, i] = v

        if not _chol_lower(S, LS):
            return xf_m, xf_c, xp_m, xp_c, ll, _STATUS_SINGULAR, k

        for i in range(n):
            _cho_solve_vec(LS, C[i], z)
            for j in range(n):
                K[i, j] = z[j]
        for i in range(n):
            nu[i] = ys[k, i] - yhat[i]
        _cho_solve_vec(LS, nu, alpha)

        maha = 0.0
        logdet = 0.0
        for i in range(n):
            maha += nu[i] * alpha[i]
            logdet += math.log(LS[i, i])
        ll += -0.5 * (maha + 2.0 * logdet + n * _LOG_2PI)

        for i in range(n):
            s = 0.0
            for j in range(n):
                s += K[i, j] * nu[j]
            m[i] = m[i] + s
        for i in range(n):
            for j in range(n):
                s = 0.0
                for q in range(n):
                    s += K[i, q] * S[q, j]
                KS[i, j] = s
        for i in range(n):
            for j in range(n):
                s = 0.0
                for q in range(n):
                    s += KS[i, q] * K[j, q]
                newP[i, j] = P[i, j] - s
        for i in range(n):
            for j in range(n):
                P[i, j] = 0.5 * (newP[i, j] + newP[j, i])

        for i in range(n):
            xf_m[k, i] = m[i]
            for j in range(n):
                xf_c[k, i, j] = P[i, j]

        # ---- predict through the RK4-discretized dynamics
        if not _chol_scaled_jitter(P, scale, L, A, jitters):
            return xf_m, xf_c, xp_m, xp_c, ll, _STATUS_CHOLESKY, k
        _sigma_points_into(m, L, pts)

        for q in range(npts):
            for i in range(n):
                xcur[i] = pts[q, i]
            for _ in range(substeps):
                _rhs(xcur, F, Qd, pv, k1)
                for i in range(n):
                    xt[i] = xcur[i] + (h / 2.0) * k1[i]
                _rhs(xt, F, Qd, pv, k2)
                for i in range(n):
                    xt[i] = xcur[i] + (h / 2.0) * k2[i]
                _rhs(xt, F, Qd, pv, k3)
                for i in range(n):
                    xt[i] = xcur[i] + h * k3[i]
                _rhs(xt, F, Qd, pv, k4)
                for i in range(n):
                    xcur[i] = xcur[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
            for i in range(n):
                pts[q, i] = xcur[i]

        for i in range(n):
            s = 0.0
            for q in range(npts):
                s += wm[q] * pts[q, i]
            m[i] = s
        for i in range(n):
            for j in range(n):
                s = 0.0
                for q in range(npts):
                    s += wc[q] * (pts[q, i] - m[i]) * (pts[q, j] - m[j])
                newP[i, j] = s + Qc[i, j]
        for i in range(n):
            for j in range(n):
                P[i, j] = 0.5 * (newP[i, j] + newP[j, i])

    return xf_m, xf_c, xp_m, xp_c, ll, _STATUS_OK, -1


def _forward_generic(p, x0, P0, Q, R, us, ys, ts, substeps, ut):
    kf = UkfFilter(
        dynamics=discretize(cstr_derivative, ts, substeps),
        measurement=cstr_measurement,
        Q=Q,
        R=R,
        belief=GaussianBelief(x0, P0),
        ut=ut,
        params=p,
    )
    return kf.forward_trajectory(us, ys)


def forward_filter_cstr(
    p: ModelParameters,
    x0,
    P0,
    Q,
    R,
    us,
    ys,
    ts: float,
    substeps: int = 1,
    ut: UtConfig = UtConfig(),
    force_generic: bool = False,
) -> FilterSolution:
    """Filter a CSTR trajectory; numba kernel when available, generic UKF
    otherwise.  Semantics are identical to running
    :meth:`rtmbe.ukf.UkfFilter.forward_trajectory` on the RK4-discretized
    model with the identity measurement map.
    """
    if len(us) != len(ys):
        raise LengthMismatch(f"Data-length mismatch: {len(us)} inputs vs {len(ys)} measurements")
    if force_generic or not NUMBA_AVAILABLE or len(us) == 0:
        return _forward_generic(p, x0, P0, Q, R, us, ys, ts, substeps, ut)

    us = np.ascontiguousarray(np.asarray(us, dtype=np.float64).reshape(len(us), -1))
    ys = np.ascontiguousarray(np.asarray(ys, dtype=np.float64).reshape(len(ys), -1))
    x0 = np.asarray(x0, dtype=np.float64)
    wm, wc = ut.weights(4)
    scale = 4 + ut.lam(4)
    jitters = np.array(_CHOLESKY_JITTERS)
    xf_m, xf_c, xp_m, xp_c, ll, status, step = _forward_cstr(
        x0,
        np.asarray(P0, dtype=np.float64),
        np.asarray(Q, dtype=np.float64),
        np.asarray(R, dtype=np.float64),
        us,
        ys,
        p.as_array(),
        float(ts),
        int(substeps),
        wm,
        wc,
        float(scale),
        jitters,
    )
    if status == _STATUS_CHOLESKY:
        raise CholeskyFailure(f"step {step}: covariance not positive-semidefinite after jitter")
    if status == _STATUS_SINGULAR:
        raise SingularInnovation(f"step {step}: innovation covariance is not invertible")
    return FilterSolution(xf_m, xf_c, xp_m, xp_c, float(ll))


def warm_up() -> None:
    """Trigger (or load from cache) the kernel compilation with a tiny run."""
    if not NUMBA_AVAILABLE:
        return
    from .dynamics import cstr_default_parameters, cstr_operating_point

    x0, u0 = cstr_operating_point()
    forward_filter_cstr(
        cstr_default_parameters(),
        x0,
        np.eye(4) * 1e-2,
        np.eye(4) * 1e-4,
        np.eye(4) * 1e-2,
        np.tile(u0, (2, 1)),
        np.tile(x0, (2, 1)),
        ts=0.005,
    )

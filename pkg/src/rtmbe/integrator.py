"""Fixed-step classical Runge-Kutta 4 integration and zero-order-hold
discretization of continuous dynamics into a discrete-time map."""

from __future__ import annotations

from typing import Callable

import numpy as np

ContinuousDynamics = Callable[..., np.ndarray]


def rk4_step(f: ContinuousDynamics, x, u, p, t: float, h: float):
    """One classical RK4 step of size ``h`` with the input held constant.

    Parameters
    ----------
    f : callable
        Continuous dynamics ``f(x, u, p, t) -> dx/dt``.
    x : state at time ``t`` (scalar or ndarray).
    u : input, held constant over the step (zero-order hold).
    p : model parameters, passed through to ``f``.
    t : current time.
    h : step size, ``h > 0``.
    """
    if h <= 0.0:
        raise ValueError(f"step size must be positive, got {h!r}")
    k1 = f(x, u, p, t)
    k2 = f(x + (h / 2.0) * k1, u, p, t + h / 2.0)
    k3 = f(x + (h / 2.0) * k2, u, p, t + h / 2.0)
    k4 = f(x + h * k3, u, p, t + h)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


class DiscreteDynamics:
    """Discrete-time state-update map ``x_next = step(x, u, p, t)``.

    Carries the sample time ``ts`` so filters built on top know how far a
    single application advances the clock.  Instances are deterministic:
    equal arguments give bit-identical results.
    """

    def __init__(self, step: Callable, ts: float, substeps: int = 1):
        if ts <= 0.0:
            raise ValueError(f"sample time must be positive, got {ts!r}")
        if substeps < 1:
            raise ValueError(f"substep count must be >= 1, got {substeps!r}")
        self._step = step
        self.ts = float(ts)
        self.substeps = int(substeps)

    def __call__(self, x, u, p, t: float):
        return self._step(x, u, p, t)


def discretize(f: ContinuousDynamics, ts: float, substeps: int = 1) -> DiscreteDynamics:
    """Turn continuous dynamics into a one-sample discrete map via RK4.

    The returned map applies ``substeps`` RK4 steps of size ``ts/substeps``,
    holding ``u`` constant across the whole sample interval and advancing
    the time argument between substeps.  ``discretize(f, ts, m)`` is
    bit-identical to the m-fold composition of ``discretize(f, ts/m, 1)``
    (with the time argument accumulated the same way).
    """
    if ts <= 0.0:
        raise ValueError(f"sample time must be positive, got {ts!r}")
    if substeps < 1:
        raise ValueError(f"substep count must be >= 1, got {substeps!r}")
    h = ts / substeps

    def step(x, u, p, t):
        tk = t
        for _ in range(substeps):
            x = rk4_step(f, x, u, p, tk, h)
            tk += h
        return x

    return DiscreteDynamics(step, ts, substeps)

"""Discrete-time PID controller with setpoint weighting, filtered
derivative on the measurement, output saturation, tracking anti-windup,
and bumpless parameter updates.

Update law (positional form, one call per sample period Ts):

    P = K*(b*r - y)
    D = ad*D - bd*(y - y_old)
    v = P + I + D + uff
    u = clamp(v, umin, umax)
    I = I + bi*(r - y) + br*(u - v)      # tracking anti-windup
    y_old = y

with precomputed coefficients

    bi = K*Ts/Ti   (0 when Ti = inf)     ad = Td/(Td + N*Ts)
    bd = K*N*ad                          br = Ts/Tt   (0 when Tt = inf)

The derivative acts on -y rather than on the error, so setpoint steps do
not kick the derivative term.  The integral state is updated after the
output is computed: the first call from zero state returns exactly
P + uff.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


class InvalidParameter(ValueError):
    """A controller parameter violates its invariant; the message names it."""


@dataclass(frozen=True)
class PidParameters:
    """Controller gains and limits.

    ``Ti = inf`` disables integral action, ``Td = 0`` disables derivative
    action.  ``Tt`` is the anti-windup tracking time; when left ``None`` it
    defaults to ``Ti`` for PI controllers, ``sqrt(Ti*Td)`` when derivative
    action is present, and ``inf`` when integral action is off.
    """

    K: float
    Ts: float
    Ti: float = math.inf
    Td: float = 0.0
    Tt: float | None = None
    N: float = 10.0
    b: float = 1.0
    umin: float = -math.inf
    umax: float = math.inf

    def resolved_Tt(self) -> float:
        if self.Tt is not None:
            return self.Tt
        if math.isinf(self.Ti):
            return math.inf
        return self.Ti if self.Td == 0.0 else math.sqrt(self.Ti * self.Td)


def _validate(params: PidParameters) -> None:
    if not (params.Ts > 0.0) or math.isinf(params.Ts):
        raise InvalidParameter(f"Ts must be positive and finite, got {params.Ts!r}")
    if not math.isfinite(params.K):
        raise InvalidParameter(f"K must be finite, got {params.K!r}")
    if not (params.Ti > 0.0):  # +inf allowed
        raise InvalidParameter(f"Ti must be positive or inf, got {params.Ti!r}")
    if not (params.Td >= 0.0) or math.isinf(params.Td):
        raise InvalidParameter(f"Td must be finite and >= 0, got {params.Td!r}")
    tt = params.resolved_Tt()
    if not (tt > 0.0):  # +inf allowed
        raise InvalidParameter(f"Tt must be positive or inf, got {tt!r}")
    if not (params.N > 0.0) or math.isinf(params.N):
        raise InvalidParameter(f"N must be positive and finite, got {params.N!r}")
    if not (0.0 <= params.b <= 1.0):
        raise InvalidParameter(f"b must be in [0, 1], got {params.b!r}")
    if not (params.umin < params.umax):
        raise InvalidParameter(f"umin must be < umax, got {params.umin!r} >= {params.umax!r}")


class PidController:
    """Mutable discrete PID controller instance.

    Single-writer: calls must be externally serialized.  All update-path
    arithmetic is plain float work with no dynamic allocation.
    """

    __slots__ = ("K", "Ti", "Td", "Tt", "N", "b", "Ts", "umin", "umax",
                 "bi", "ad", "bd", "br", "I", "D", "y_old")

    def __init__(self, params: PidParameters):
        _validate(params)
        self.K = params.K
        self.Ti = params.Ti
        self.Td = params.Td
        self.Tt = params.resolved_Tt()
        self.N = params.N
        self.b = params.b
        self.Ts = params.Ts
        self.umin = params.umin
        self.umax = params.umax
        self._update_coefficients()
        self.I = 0.0
        self.D = 0.0
        self.y_old = 0.0

    def _update_coefficients(self) -> None:
        self.bi = 0.0 if math.isinf(self.Ti) else self.K * self.Ts / self.Ti
        self.ad = self.Td / (self.Td + self.N * self.Ts)
        self.bd = self.K * self.N * self.ad
        self.br = 0.0 if math.isinf(self.Tt) else self.Ts / self.Tt

    def calculate_control(self, r: float, y: float, uff: float = 0.0) -> float:
        """One controller update; returns the saturated control signal."""
        P = self.K * (self.b * r - y)
        self.D = self.ad * self.D - self.bd * (y - self.y_old)
        v = P + self.I + self.D + uff
        if v < self.umin:
            u = self.umin
        elif v > self.umax:
            u = self.umax
        else:
            u = v
        self.I += self.bi * (r - y) + self.br * (u - v)
        self.y_old = y
        return u

    def set_K(self, K_new: float, r: float, y: float) -> None:
        """Change the proportional gain with bumpless transfer.

        The integral state absorbs the proportional jump so that P + I at
        the current ``(r, y)`` is identical before and after the change.
        """
        if not math.isfinite(K_new):
            raise InvalidParameter(f"K must be finite, got {K_new!r}")
        self.I += (self.K - K_new) * (self.b * r - y)
        self.K = K_new
        self._update_coefficients()

    def set_Ti(self, Ti_new: float) -> None:
        """Change the integral time; state is left untouched."""
        if not (Ti_new > 0.0):  # +inf allowed
            raise InvalidParameter(f"Ti must be positive or inf, got {Ti_new!r}")
        self.Ti = Ti_new
        self._update_coefficients()

    def set_Td(self, Td_new: float) -> None:
        """Change the derivative time; state is left untouched."""
        if not (Td_new >= 0.0) or math.isinf(Td_new):
            raise InvalidParameter(f"Td must be finite and >= 0, got {Td_new!r}")
        self.Td = Td_new
        self._update_coefficients()

    def reset_state(self) -> None:
        """Zero the integral, derivative, and stored measurement."""
        self.I = 0.0
        self.D = 0.0
        self.y_old = 0.0

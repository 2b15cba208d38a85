"""Flat C-style wrapper API around one global PID controller instance.

This module is the in-process twin of the exported shared-library surface
(see :mod:`rtmbe.capi_build`): seven flat functions operating on a single
module-level controller, with errors reported through a sticky last-error
flag instead of exceptions so that embedded hosts are never terminated by
the library.

Error protocol: calls before :func:`pid_init` are no-ops (``calculate_control``
returns a quiet NaN) and set the flag to ``ERR_UNINITIALIZED``; parameter
values violating an invariant leave the controller untouched and set
``ERR_INVALID_PARAMETER``.  :func:`pid_last_error` returns and clears the
most recent code.

Not thread-safe: all calls must come from one thread or be externally
serialized.
"""

from __future__ import annotations

import math

from .pid import InvalidParameter, PidController, PidParameters

ERR_NONE = 0
ERR_UNINITIALIZED = 1
ERR_INVALID_PARAMETER = 2

# Default parameters of the global instance: proportional-integral with
# unit gain, unit integral time, derivative off, one-second sampling.
DEFAULT_PARAMETERS = PidParameters(K=1.0, Ts=1.0, Ti=1.0, Td=0.0)

_controller: PidController | None = None
_last_error: int = ERR_NONE


def pid_init() -> int:
    """One-time construction of the global controller; returns 0.

    Idempotent: a second call returns 0 and preserves the controller state.
    """
    global _controller
    if _controller is None:
        _controller = PidController(DEFAULT_PARAMETERS)
    return 0


def calculate_control(r: float, y: float, uff: float) -> float:
    """Controller update on the global instance; NaN if uninitialized."""
    global _last_error
    if _controller is None:
        _last_error = ERR_UNINITIALIZED
        return math.nan
    return _controller.calculate_control(r, y, uff)


def set_K(K: float, r: float, y: float) -> None:
    """Bumpless proportional-gain change on the global instance."""
    global _last_error
    if _controller is None:
        _last_error = ERR_UNINITIALIZED
        return
    try:
        _controller.set_K(K, r, y)
    except InvalidParameter:
        _last_error = ERR_INVALID_PARAMETER


def set_Ti(Ti: float) -> None:
    global _last_error
    if _controller is None:
        _last_error = ERR_UNINITIALIZED
        return
    try:
        _controller.set_Ti(Ti)
    except InvalidParameter:
        _last_error = ERR_INVALID_PARAMETER


def set_Td(Td: float) -> None:
    global _last_error
    if _controller is None:
        _last_error = ERR_UNINITIALIZED
        return
    try:
        _controller.set_Td(Td)
    except InvalidParameter:
        _last_error = ERR_INVALID_PARAMETER


def reset_state() -> None:
    global _last_error
    if _controller is None:
        _last_error = ERR_UNINITIALIZED
        return
    _controller.reset_state()


def pid_last_error() -> int:
    """Return and clear the most recent error code (0 = none)."""
    global _last_error
    code = _last_error
    _last_error = ERR_NONE
    return code


def _reset_module_state() -> None:
    """Drop the global instance and clear the flag (test support only)."""
    global _controller, _last_error
    _controller = None
    _last_error = ERR_NONE

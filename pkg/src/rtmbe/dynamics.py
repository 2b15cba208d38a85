"""Continuous-time CSTR model in the form dx/dt = f(x, u, p, t).

The plant is an exothermic continuously stirred tank reactor with the
series/parallel reaction scheme A -> B -> C and 2A -> D.  States are

    cA  concentration of reactant A        [mol/L]
    cB  concentration of product B         [mol/L]
    TR  reactor temperature                [degC]
    TK  coolant-jacket temperature         [degC]

and inputs are

    F     normalized feed flow (dilution rate)  [1/h]
    Qdot  cooling power                         [kJ/h]

Time is measured in hours.  The measurement map observes all four states
directly (identity).  Default parameter values and the nominal operating
point are committed as config files under ``rtmbe/data`` and loaded here.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from functools import lru_cache
from importlib import resources
from pathlib import Path

import numpy as np

STATE_DIM = 4
INPUT_DIM = 2
MEAS_DIM = 4

# Kelvin offset used inside the Arrhenius terms; temperatures are carried
# in degC everywhere else.
_T_OFFSET = 273.15


class ConfigError(ValueError):
    """Malformed parameter config file (bad syntax, unknown or missing key)."""


@dataclass(frozen=True)
class ModelParameters:
    """Physical constants of the CSTR.

    All values must be positive except the activation-energy coefficients
    ``E1..E3`` and the reaction enthalpies ``dH1..dH3``, whose signs are
    free (``Ei`` is used as ``ki = ki0 * exp(Ei / (TR + 273.15))``, so the
    usual activation energies enter with a negative sign).
    """

    k10: float
    k20: float
    k30: float
    E1: float
    E2: float
    E3: float
    dH1: float
    dH2: float
    dH3: float
    rho: float
    Cp: float
    kwAR: float
    VR: float
    mK: float
    CpK: float
    cA0: float
    Tin: float

    _SIGN_FREE = ("E1", "E2", "E3", "dH1", "dH2", "dH3")
    # Rate and heat-transfer coefficients may be exactly zero (reaction or
    # exchange disabled); capacities and geometry appear in denominators and
    # must stay strictly positive.
    _ZERO_OK = ("k10", "k20", "k30", "kwAR")

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not np.isfinite(v):
                raise ValueError(f"parameter {f.name} must be finite, got {v!r}")
            if f.name in self._SIGN_FREE:
                continue
            if f.name in self._ZERO_OK:
                if v < 0.0:
                    raise ValueError(f"parameter {f.name} must be >= 0, got {v!r}")
            elif v <= 0.0:
                raise ValueError(f"parameter {f.name} must be positive, got {v!r}")

    def as_array(self) -> np.ndarray:
        """Field values as a flat float64 vector, in declaration order."""
        return np.array([getattr(self, f.name) for f in fields(self)], dtype=np.float64)


def _parse_kv_file(text: str, source: str) -> dict[str, float]:
    values: dict[str, float] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        name, sep, val = line.partition("=")
        if not sep:
            raise ConfigError(f"{source}:{lineno}: expected 'name = value', got {raw!r}")
        name = name.strip()
        try:
            values[name] = float(val.strip())
        except ValueError:
            raise ConfigError(f"{source}:{lineno}: invalid number for {name}: {val.strip()!r}") from None
    return values


def _check_keys(values: dict[str, float], expected: tuple[str, ...], source: str) -> None:
    unknown = sorted(set(values) - set(expected))
    if unknown:
        raise ConfigError(f"{source}: unknown keys: {', '.join(unknown)}")
    missing = sorted(set(expected) - set(values))
    if missing:
        raise ConfigError(f"{source}: missing keys: {', '.join(missing)}")


_PARAM_KEYS = tuple(f.name for f in fields(ModelParameters))


def load_parameters(path) -> ModelParameters:
    """Read a ``name = value`` config file into :class:`ModelParameters`.

    Keys must match the field names exactly; unknown or missing keys raise
    :class:`ConfigError`.
    """
    path = Path(path)
    values = _parse_kv_file(path.read_text(), str(path))
    _check_keys(values, _PARAM_KEYS, str(path))
    return ModelParameters(**values)


def save_parameters(p: ModelParameters, path) -> None:
    """Write parameters in the flat ``name = value`` format."""
    lines = [f"{f.name} = {getattr(p, f.name)!r}" for f in fields(p)]
    Path(path).write_text("\n".join(lines) + "\n")


def _data_text(name: str) -> str:
    return resources.files("rtmbe").joinpath("data", name).read_text()


@lru_cache(maxsize=1)
def cstr_default_parameters() -> ModelParameters:
    """The committed default parameter set (see ``data/cstr_default_params.cfg``)."""
    values = _parse_kv_file(_data_text("cstr_default_params.cfg"), "cstr_default_params.cfg")
    _check_keys(values, _PARAM_KEYS, "cstr_default_params.cfg")
    return ModelParameters(**values)


@lru_cache(maxsize=1)
def _operating_point_raw() -> dict[str, float]:
    values = _parse_kv_file(_data_text("cstr_operating_point.cfg"), "cstr_operating_point.cfg")
    _check_keys(values, ("cA", "cB", "TR", "TK", "F", "Qdot"), "cstr_operating_point.cfg")
    return values


def cstr_operating_point() -> tuple[np.ndarray, np.ndarray]:
    """Committed steady state ``x*`` and nominal input ``u*``.

    ``x*`` satisfies ``cstr_derivative(x*, u*, defaults, 0) ~= 0`` (it was
    obtained by a damped Newton solve on the committed default parameters).
    Returns fresh arrays on every call.
    """
    v = _operating_point_raw()
    x = np.array([v["cA"], v["cB"], v["TR"], v["TK"]])
    u = np.array([v["F"], v["Qdot"]])
    return x, u


def cstr_derivative(x, u, p: ModelParameters, t: float = 0.0) -> np.ndarray:
    """Time derivative of the CSTR state.

    ``x`` may be a single state of shape ``(4,)`` or a batch of shape
    ``(4, m)`` (states in columns); the result has the same shape.  Pure
    function: no state is mutated, and non-finite inputs propagate to the
    output instead of raising.
    """
    x = np.asarray(x, dtype=np.float64)
    cA, cB, TR, TK = x[0], x[1], x[2], x[3]
    F, Qdot = float(u[0]), float(u[1])

    TRK = TR + _T_OFFSET
    k1 = p.k10 * np.exp(p.E1 / TRK)
    k2 = p.k20 * np.exp(p.E2 / TRK)
    k3 = p.k30 * np.exp(p.E3 / TRK)

    r1 = k1 * cA
    r2 = k2 * cB
    r3 = k3 * cA * cA

    dcA = F * (p.cA0 - cA) - r1 - r3
    dcB = -F * cB + r1 - r2
    dTR = (
        F * (p.Tin - TR)
        + p.kwAR / (p.rho * p.Cp * p.VR) * (TK - TR)
        - (r1 * p.dH1 + r2 * p.dH2 + r3 * p.dH3) / (p.rho * p.Cp)
    )
    dTK = (Qdot + p.kwAR * (TR - TK)) / (p.mK * p.CpK)

    out = np.empty_like(x)
    out[0], out[1], out[2], out[3] = dcA, dcB, dTR, dTK
    return out


def cstr_measurement(x) -> np.ndarray:
    """Observation map: all four states measured directly (identity)."""
    return np.asarray(x, dtype=np.float64)

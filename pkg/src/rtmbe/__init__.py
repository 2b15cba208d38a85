"""Real-time model-based estimation and control toolkit.

Two halves:

* State estimation: a CSTR benchmark model, a fixed-step RK4 integrator,
  and an Unscented Kalman Filter with trajectory log-likelihood, driven by
  the ``rtmbe`` command-line tool over headerless binary trajectory files.
* Control: a discrete PID controller with anti-windup and bumpless
  parameter updates, exported as a C-callable shared library wrapping one
  global controller instance.
"""

from .dynamics import (
    ModelParameters,
    cstr_default_parameters,
    cstr_derivative,
    cstr_measurement,
    cstr_operating_point,
    load_parameters,
    save_parameters,
)
from .integrator import DiscreteDynamics, discretize, rk4_step
from .pid import InvalidParameter, PidController, PidParameters
from .ukf import (
    CholeskyFailure,
    FilterSolution,
    GaussianBelief,
    LengthMismatch,
    SigmaPointSet,
    SingularInnovation,
    UkfFilter,
    UtConfig,
    sigma_points,
)

__version__ = "0.1.0"

__all__ = [
    "CholeskyFailure",
    "DiscreteDynamics",
    "FilterSolution",
    "GaussianBelief",
    "InvalidParameter",
    "LengthMismatch",
    "ModelParameters",
    "PidController",
    "PidParameters",
    "SigmaPointSet",
    "SingularInnovation",
    "UkfFilter",
    "UtConfig",
    "cstr_default_parameters",
    "cstr_derivative",
    "cstr_measurement",
    "cstr_operating_point",
    "discretize",
    "load_parameters",
    "rk4_step",
    "save_parameters",
    "sigma_points",
    "__version__",
]

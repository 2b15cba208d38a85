"""Command-line entry point: simulate the CSTR benchmark and filter the
resulting binary trajectory files.

Subcommands
-----------
``rtmbe simulate --n N --seed S [--ts H] [--out-dir DIR]``
    Integrate the plant from the committed steady state under a seeded
    piecewise-constant input excitation, add seeded Gaussian measurement
    noise, and write ``data_u.bin`` / ``data_y.bin`` plus the noise-free
    truth ``data_x.bin``.

``rtmbe filter [--u PATH] [--y PATH] [--ts H] [--substeps M]``
    Read the trajectory files (defaults ``data_u.bin`` / ``data_y.bin`` in
    the working directory), run the unscented Kalman filter, and print
    exactly two lines: ``Data length <N>`` and ``loglik = <value>``.

File format: raw IEEE-754 binary64, little-endian, record-major (all
channels of one sample contiguous), no header.  Input records are 2 wide
(F, Qdot), measurement and truth records 4 wide (cA, cB, TR, TK).

Exit codes: 0 success, 1 usage, 2 file or format error, 3 length
mismatch, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .dynamics import (
    INPUT_DIM,
    MEAS_DIM,
    STATE_DIM,
    cstr_default_parameters,
    cstr_derivative,
    cstr_operating_point,
)
from .integrator import discretize
from .ukf import FilterNumericsError, LengthMismatch, UtConfig
from .fastpath import forward_filter_cstr

U_FILE_DEFAULT = "data_u.bin"
Y_FILE_DEFAULT = "data_y.bin"
X_FILE_DEFAULT = "data_x.bin"

_RECORD_DTYPE = np.dtype("<f8")
U_RECORD_BYTES = INPUT_DIM * _RECORD_DTYPE.itemsize
Y_RECORD_BYTES = MEAS_DIM * _RECORD_DTYPE.itemsize

# Sampling defaults; the CSTR time constants tolerate far larger RK4 steps,
# confirmed by the substep-refinement tests.
DEFAULT_TS = 0.005  # hours
DEFAULT_SUBSTEPS = 1

# Default measurement noise standard deviations (model units): what the
# simulator adds, and the R the filter assumes.
MEAS_NOISE_STD = (0.05, 0.05, 0.5, 0.5)

# Initial-belief spread per state, and the small regularizing process noise
# Q = PROCESS_NOISE_SCALE * diag(scale^2) used by the filter (the simulation
# itself is noise-free in the state).
INIT_STATE_STD = (0.1, 0.1, 1.0, 1.0)
PROCESS_NOISE_SCALE = 1e-4

# Input excitation: piecewise-constant blocks, multipliers drawn uniformly
# around the nominal operating inputs.
EXCITATION_BLOCK = 50
F_EXCITATION_RANGE = (0.85, 1.15)
QDOT_EXCITATION_RANGE = (0.9, 1.1)


class FileError(OSError):
    """Trajectory file missing or unreadable."""


class FormatError(ValueError):
    """Trajectory file size is not a whole number of records."""


class UsageError(Exception):
    """Bad command-line invocation."""


def _read_records(path, width: int) -> np.ndarray:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as e:
        raise FileError(f"cannot read {path}: {e}") from e
    record_bytes = width * _RECORD_DTYPE.itemsize
    if len(raw) % record_bytes != 0:
        raise FormatError(
            f"{path}: size {len(raw)} is not a multiple of the {record_bytes}-byte record"
        )
    return np.frombuffer(raw, dtype=_RECORD_DTYPE).reshape(-1, width)


def _write_records(data: np.ndarray, path) -> None:
    try:
        Path(path).write_bytes(np.ascontiguousarray(data, dtype=_RECORD_DTYPE).tobytes())
    except OSError as e:
        raise FileError(f"cannot write {path}: {e}") from e


def read_trajectories(u_path, y_path) -> tuple[np.ndarray, np.ndarray]:
    """Decode input and measurement files; validates equal record counts."""
    us = _read_records(u_path, INPUT_DIM)
    ys = _read_records(y_path, MEAS_DIM)
    if us.shape[0] != ys.shape[0]:
        raise LengthMismatch(
            f"Data-length mismatch: {us.shape[0]} input records vs {ys.shape[0]} measurement records"
        )
    return us, ys


def write_trajectories(us, ys, u_path, y_path) -> None:
    """Encode input and measurement sequences in the binary file format."""
    us = np.asarray(us, dtype=np.float64).reshape(len(us), INPUT_DIM) if len(us) else np.empty((0, INPUT_DIM))
    ys = np.asarray(ys, dtype=np.float64).reshape(len(ys), MEAS_DIM) if len(ys) else np.empty((0, MEAS_DIM))
    if us.shape[0] != ys.shape[0]:
        raise LengthMismatch(
            f"Data-length mismatch: {us.shape[0]} input records vs {ys.shape[0]} measurement records"
        )
    _write_records(us, u_path)
    _write_records(ys, y_path)


def simulate_trajectories(
    n: int,
    seed: int,
    ts: float = DEFAULT_TS,
    noise_std=MEAS_NOISE_STD,
    out_dir=".",
    block: int = EXCITATION_BLOCK,
    f_range=F_EXCITATION_RANGE,
    qdot_range=QDOT_EXCITATION_RANGE,
) -> tuple[Path, Path, Path]:
    """Generate and write data_u.bin, data_y.bin, and the truth data_x.bin.

    Fully deterministic for a given seed: the PCG64 stream is consumed in a
    fixed order (all F multipliers, all Qdot multipliers, then the
    measurement noise).  Noise is skipped entirely when all stated standard
    deviations are zero, so the measurement file is then bit-identical to
    the truth file.
    """
    if n < 0:
        raise UsageError(f"sample count must be >= 0, got {n}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    p = cstr_default_parameters()
    x_star, u_star = cstr_operating_point()
    rng = np.random.Generator(np.random.PCG64(seed))

    n_blocks = -(-n // block) if n else 0
    f_mult = rng.uniform(*f_range, size=n_blocks)
    q_mult = rng.uniform(*qdot_range, size=n_blocks)
    us = np.empty((n, INPUT_DIM))
    for b in range(n_blocks):
        lo, hi = b * block, min((b + 1) * block, n)
        us[lo:hi, 0] = f_mult[b] * u_star[0]
        us[lo:hi, 1] = q_mult[b] * u_star[1]

    step = discretize(cstr_derivative, ts, DEFAULT_SUBSTEPS)
    xs = np.empty((n, STATE_DIM))
    x = x_star.copy()
    t = 0.0
    for k in range(n):
        xs[k] = x
        x = step(x, us[k], p, t)
        t += ts

    noise_std = np.asarray(noise_std, dtype=np.float64)
    if np.any(noise_std > 0.0):
        ys = xs + rng.standard_normal((n, MEAS_DIM)) * noise_std
    else:
        ys = xs.copy()

    u_path, y_path, x_path = out_dir / U_FILE_DEFAULT, out_dir / Y_FILE_DEFAULT, out_dir / X_FILE_DEFAULT
    _write_records(us, u_path)
    _write_records(ys, y_path)
    _write_records(xs, x_path)
    return u_path, y_path, x_path


def default_filter_config() -> dict:
    """Initial belief and noise covariances used by the ``filter`` command."""
    x_star, _ = cstr_operating_point()
    scale_sq = np.square(np.asarray(INIT_STATE_STD))
    return {
        "x0": x_star,
        "P0": np.diag(scale_sq),
        "Q": PROCESS_NOISE_SCALE * np.diag(scale_sq),
        "R": np.diag(np.square(np.asarray(MEAS_NOISE_STD))),
    }


def run_filter(
    u_path=U_FILE_DEFAULT,
    y_path=Y_FILE_DEFAULT,
    ts: float = DEFAULT_TS,
    substeps: int = DEFAULT_SUBSTEPS,
    force_generic: bool = False,
) -> tuple[int, float]:
    """Read trajectories and filter them; returns (record count, loglik)."""
    us, ys = read_trajectories(u_path, y_path)
    cfg = default_filter_config()
    sol = forward_filter_cstr(
        cstr_default_parameters(),
        cfg["x0"],
        cfg["P0"],
        cfg["Q"],
        cfg["R"],
        us,
        ys,
        ts=ts,
        substeps=substeps,
        ut=UtConfig(),
        force_generic=force_generic,
    )
    return us.shape[0], sol.ll


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="rtmbe", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", metavar="{simulate,filter}")

    sim = sub.add_parser("simulate", help="generate benchmark trajectory files")
    sim.add_argument("--n", type=int, required=True, help="number of samples")
    sim.add_argument("--seed", type=int, required=True, help="PRNG seed")
    sim.add_argument("--ts", type=float, default=DEFAULT_TS, help="sample time in hours")
    sim.add_argument("--out-dir", default=".", help="output directory")

    filt = sub.add_parser("filter", help="filter trajectory files and print the log-likelihood")
    filt.add_argument("--u", default=U_FILE_DEFAULT, help="input trajectory file")
    filt.add_argument("--y", default=Y_FILE_DEFAULT, help="measurement trajectory file")
    filt.add_argument("--ts", type=float, default=DEFAULT_TS, help="sample time in hours")
    filt.add_argument("--substeps", type=int, default=DEFAULT_SUBSTEPS, help="RK4 substeps per sample")
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "simulate":
            simulate_trajectories(args.n, args.seed, ts=args.ts, out_dir=args.out_dir)
        elif args.command == "filter":
            if args.ts <= 0.0:
                raise UsageError(f"--ts must be positive, got {args.ts}")
            if args.substeps < 1:
                raise UsageError(f"--substeps must be >= 1, got {args.substeps}")
            n, ll = run_filter(args.u, args.y, ts=args.ts, substeps=args.substeps)
            if not np.isfinite(ll):
                raise FilterNumericsError(f"log-likelihood is not finite: {ll!r}")
            print(f"Data length {n}")
            print(f"loglik = {float(ll)!r}")
        else:
            raise UsageError("missing command (expected 'simulate' or 'filter')")
    except UsageError as e:
        print(f"rtmbe: {e}", file=sys.stderr)
        return 1
    except (FileError, FormatError) as e:
        print(f"rtmbe: {e}", file=sys.stderr)
        return 2
    except LengthMismatch as e:
        print(f"rtmbe: {e}", file=sys.stderr)
        return 3
    except FilterNumericsError as e:
        print(f"rtmbe: {e}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Build the C-callable shared library exposing the global PID controller.

The library embeds the Python runtime (via cffi's embedding mode) and
exports seven plain C symbols that delegate to :mod:`rtmbe.capi`:

    int    pid_init(void);
    double calculate_control(double r, double y, double uff);
    void   set_K(double K, double r, double y);
    void   set_Ti(double Ti);
    void   set_Td(double Td);
    void   reset_state(void);
    int    pid_last_error(void);

A matching header ``pid_controller.h`` is written next to the library.
Run ``python -m rtmbe.capi_build --out-dir DIR`` to build.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

_EXPORTED_API = """
    int pid_init(void);
    double calculate_control(double r, double y, double uff);
    void set_K(double K, double r, double y);
    void set_Ti(double Ti);
    void set_Td(double Td);
    void reset_state(void);
    int pid_last_error(void);
"""

HEADER_NAME = "pid_controller.h"
LIB_STEM = "pidcontrol"

HEADER_TEXT = """\
/* pid_controller.h - C interface of the embedded PID controller library.
 *
 * The library wraps a single global discrete PID controller (gains K, Ti,
 * Td, sample time Ts; defaults K=1, Ti=1, Td=0, Ts=1).  Call pid_init()
 * once before anything else; it is idempotent and returns 0.
 *
 * Error protocol: the library never aborts the host.  Calls made before
 * pid_init() are no-ops (calculate_control returns a quiet NaN) and set a
 * sticky error flag; parameter values violating an invariant are ignored
 * likewise.  pid_last_error() returns and clears the flag:
 *   0 = no error, 1 = uninitialized, 2 = invalid parameter.
 *
 * Threading: NOT thread-safe.  All calls must come from one thread or be
 * externally serialized.
 *
 * Loading: the library embeds a language runtime.  Hosts using dlopen()
 * must pass RTLD_GLOBAL (e.g. dlopen(path, RTLD_NOW | RTLD_GLOBAL)) so the
 * runtime's own extension modules can resolve its symbols.
 */
#ifndef PID_CONTROLLER_H
#define PID_CONTROLLER_H

#ifdef __cplusplus
extern "C" {
#endif

/* One-time initialization of the global controller; returns 0. */
int pid_init(void);

/* One controller update: setpoint r, measurement y, feedforward uff.
 * Returns the saturated control signal. */
double calculate_control(double r, double y, double uff);

/* Bumpless change of the proportional gain at operating point (r, y). */
void set_K(double K, double r, double y);

/* Change integral / derivative time; controller state is untouched. */
void set_Ti(double Ti);
void set_Td(double Td);

/* Zero the integral and derivative state and the stored measurement. */
void reset_state(void);

/* Return and clear the most recent error code (see protocol above). */
int pid_last_error(void);

#ifdef __cplusplus
}
#endif

#endif /* PID_CONTROLLER_H */
"""

# Runs inside the embedded interpreter when the library is first used.
# The build-time search paths are baked in so a plain C host finds the
# package without any environment setup.
_INIT_CODE_TEMPLATE = """
import sys

for _p in {extra_paths!r}:
    if _p not in sys.path:
        sys.path.insert(0, _p)

from {module} import ffi
import rtmbe.capi as _capi


@ffi.def_extern()
def pid_init():
    return _capi.pid_init()


@ffi.def_extern()
def calculate_control(r, y, uff):
    return _capi.calculate_control(r, y, uff)


@ffi.def_extern()
def set_K(K, r, y):
    _capi.set_K(K, r, y)


@ffi.def_extern()
def set_Ti(Ti):
    _capi.set_Ti(Ti)


@ffi.def_extern()
def set_Td(Td):
    _capi.set_Td(Td)


@ffi.def_extern()
def reset_state():
    _capi.reset_state()


@ffi.def_extern()
def pid_last_error():
    return _capi.pid_last_error()
"""


def _lib_filename() -> str:
    if sys.platform.startswith("win"):
        return f"{LIB_STEM}.dll"
    if sys.platform == "darwin":
        return f"lib{LIB_STEM}.dylib"
    return f"lib{LIB_STEM}.so"


def _sources_mtime() -> float:
    pkg = Path(__file__).parent
    return max((pkg / name).stat().st_mtime for name in ("capi.py", "pid.py", "capi_build.py"))


def build_shared_library(out_dir, force: bool = False) -> tuple[Path, Path]:
    """Compile the shared library and write the header into ``out_dir``.

    Skips the (slow) C compilation when an up-to-date library already
    exists, unless ``force`` is given.  Returns (library path, header path).
    """
    import cffi

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    lib_path = out_dir / _lib_filename()
    header_path = out_dir / HEADER_NAME
    header_path.write_text(HEADER_TEXT)

    if not force and lib_path.exists() and lib_path.stat().st_mtime >= _sources_mtime():
        return lib_path, header_path

    src_dir = str(Path(__file__).resolve().parent.parent)
    module_name = f"_{LIB_STEM}_embed"

    ffibuilder = cffi.FFI()
    ffibuilder.embedding_api(_EXPORTED_API)
    ffibuilder.set_source(module_name, "")
    ffibuilder.embedding_init_code(
        _INIT_CODE_TEMPLATE.format(module=module_name, extra_paths=[src_dir])
    )
    ffibuilder.compile(tmpdir=str(out_dir), target=lib_path.name, verbose=False)
    return lib_path, header_path


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="python -m rtmbe.capi_build",
        description="Build the C-callable PID controller shared library.",
    )
    parser.add_argument("--out-dir", default="build/lib", help="output directory (default: build/lib)")
    parser.add_argument("--force", action="store_true", help="rebuild even if up to date")
    args = parser.parse_args(argv)
    lib_path, header_path = build_shared_library(args.out_dir, force=args.force)
    print(f"library: {lib_path}")
    print(f"header:  {header_path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

"""Integration tests for the C host program.

Builds the shared library and the demo with the system C toolchain, runs
the demo as a real subprocess, and checks its output against an in-process
execution of the same call sequence (cross-boundary consistency), plus the
failure-mode exit codes.
"""

import shutil
import subprocess
from pathlib import Path

import pytest

CDEMO_DIR = Path(__file__).parent
REPO_ROOT = CDEMO_DIR.parent

pytestmark = pytest.mark.skipif(shutil.which("cc") is None, reason="no C toolchain")


@pytest.fixture(scope="module")
def lib_path():
    from rtmbe.capi_build import build_shared_library

    lib, _ = build_shared_library(REPO_ROOT / "build" / "lib")
    return lib


@pytest.fixture(scope="module")
def demo_binary():
    subprocess.run(["make", "-s", "pid_demo"], cwd=CDEMO_DIR, check=True)
    return CDEMO_DIR / "pid_demo"


def expected_trace():
    """The same call sequence run against the in-process controller."""
    from rtmbe.capi import DEFAULT_PARAMETERS
    from rtmbe.pid import PidController

    c = PidController(DEFAULT_PARAMETERS)
    vals = [c.calculate_control(1.0, 0.0, 0.0) for _ in range(2)]
    c.set_K(0.0, 1.0, 0.0)
    vals += [c.calculate_control(1.0, 0.0, 0.0) for _ in range(3)]
    return vals


def test_demo_output_matches_in_process_trace(demo_binary, lib_path):
    proc = subprocess.run(
        [str(demo_binary), str(lib_path)], capture_output=True, text=True, timeout=120
    )
    assert proc.returncode == 0, proc.stderr
    lines = proc.stdout.splitlines()
    assert len(lines) == 5
    expected = expected_trace()
    for line, val in zip(lines, expected):
        assert line == f"calc_ctrl returned: {val:.6f}"


def test_bogus_library_path_exits_1(demo_binary, tmp_path):
    proc = subprocess.run(
        [str(demo_binary), str(tmp_path / "no_such_lib.so")],
        capture_output=True,
        text=True,
        timeout=60,
    )
    assert proc.returncode == 1
    assert "failed to load" in proc.stderr


def test_library_missing_symbol_exits_2(demo_binary, tmp_path):
    stub = tmp_path / "stub.c"
    stub.write_text("int pid_init(void) { return 0; }\n")
    stub_lib = tmp_path / "libstub.so"
    subprocess.run(
        ["cc", "-shared", "-fPIC", "-o", str(stub_lib), str(stub)], check=True, timeout=60
    )
    proc = subprocess.run(
        [str(demo_binary), str(stub_lib)], capture_output=True, text=True, timeout=60
    )
    assert proc.returncode == 2
    assert "missing symbol: calculate_control" in proc.stderr

import gc
import sys

import numpy as np
import pytest

from rtmbe.cli import simulate_trajectories


@pytest.fixture(scope="session")
def sim_dir(tmp_path_factory):
    """Benchmark trajectory files: n=1000, seed=42, default noise."""
    out = tmp_path_factory.mktemp("sim")
    simulate_trajectories(1000, 42, out_dir=out)
    return out


@pytest.fixture(scope="session")
def shared_lib(tmp_path_factory):
    """The C-callable controller library, built once per session."""
    from rtmbe.capi_build import build_shared_library

    out = tmp_path_factory.mktemp("clib")
    lib_path, header_path = build_shared_library(out)
    return lib_path, header_path


def net_allocated_blocks(fn, iters):
    """Net live-allocator-block growth attributable to ``iters`` calls of
    ``fn``, as seen by the CPython allocator instrumentation.

    A full-size warm-up run first drives caches and freelists to their
    high-water marks; the constant overhead of the measurement loop itself
    is calibrated away against a no-op loop.  A steady-state hot path must
    measure exactly zero.
    """
    counts = np.zeros(4, dtype=np.int64)  # snapshots land in preallocated slots

    def snapshot(slot):
        gc.collect()
        counts[slot] = sys.getallocatedblocks()

    for _ in range(iters):  # warm-up at full scale
        fn()
    snapshot(0)
    for _ in range(iters):  # no-op baseline
        pass
    snapshot(1)
    for _ in range(iters):
        fn()
    snapshot(2)
    baseline = counts[1] - counts[0]
    return int((counts[2] - counts[1]) - baseline)


def random_psd(rng, n, scale=1.0, floor=0.0):
    """Random symmetric PSD matrix with optional diagonal floor."""
    A = rng.standard_normal((n, n)) * scale
    return A @ A.T + floor * np.eye(n)

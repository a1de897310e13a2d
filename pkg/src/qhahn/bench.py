"""Timing comparison of the Monte Carlo kernel backends."""
from __future__ import annotations

import time

import numpy as np

from . import kernels
from .hopping import ModelParams
from .montecarlo import PhiTable

DEFAULT_PARAMS = ModelParams(0.3, 0.7, 0.5)


def _time_backend(impl, steps, L, N, table, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        occ = np.zeros(L, dtype=np.int64)
        occ[0] = N
        codes = np.zeros(steps, dtype=np.int64)
        current = np.zeros(steps, dtype=np.int64)
        t0 = time.perf_counter()
        impl.run_ring(occ, steps, table.cdf, 7, 0, 0, 0, codes, current)
        best = min(best, time.perf_counter() - t0)
        out = codes
    return best, out


def available_backends() -> list:
    names = ["python"]
    try:
        kernels.get("cython")
        names.append("cython")
    except ImportError:
        pass
    return names


def run_benchmark(steps: int = 200000, L: int = 4, N: int = 3, repeat: int = 3,
                  params: ModelParams = DEFAULT_PARAMS) -> dict:
    """Best-of-``repeat`` wall time per backend on the same stream."""
    table = PhiTable(params, N)
    timings, streams = {}, {}
    for name in available_backends():
        timings[name], streams[name] = _time_backend(kernels.get(name), steps, L, N, table, repeat)
    report = {"steps": steps, "L": L, "N": N, "backends": list(timings), "timings": timings}
    if len(streams) == 2:
        report["identical"] = bool(np.array_equal(streams["python"], streams["cython"]))
        report["speedup"] = timings["python"] / timings["cython"]
    return report

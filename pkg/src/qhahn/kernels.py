"""Backend selection for the Monte Carlo kernels.

The compiled extension is used when it was built and ``QHAHN_PURE_PYTHON``
is unset; otherwise the pure-Python module takes over.  Both produce
identical streams.
"""
import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if not os.environ.get("QHAHN_PURE_PYTHON"):
    try:
        from . import _kernels as _impl  # noqa: F811

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py

mix64 = _impl.mix64
counter_uniform = _impl.counter_uniform
run_ring = _impl.run_ring


def get(backend: str):
    """Kernel module by name ("python" or "cython")."""
    if backend == "python":
        return _kernels_py
    if backend == "cython":
        from . import _kernels

        return _kernels
    raise ValueError(f"unknown backend {backend!r}")

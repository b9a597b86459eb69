"""Kernel backend selection.

The hot grid-search kernels exist twice: a numba-JIT implementation
(kernels_numba) and a pure-numpy fallback (kernels_numpy) with identical
semantics.  The default is numba when importable; set the environment
variable CCVRADAR_BACKEND=numpy to force the fallback, and CCVRADAR_THREADS
to pin the numba thread count.  benchmarks/bench_backends.py compares the
two.
"""
from __future__ import annotations

import os
import warnings

_ENV_BACKEND = "CCVRADAR_BACKEND"
_ENV_THREADS = "CCVRADAR_THREADS"

_active: str | None = None
_modules: dict[str, object] = {}


def available_backends() -> tuple[str, ...]:
    names = []
    if _try_load("numba") is not None:
        names.append("numba")
    names.append("numpy")
    return tuple(names)


def _try_load(name: str):
    if name in _modules:
        return _modules[name]
    if name == "numba":
        try:
            from . import kernels_numba as mod
        except ImportError:
            _modules[name] = None
            return None
    elif name == "numpy":
        from . import kernels_numpy as mod
    else:
        raise ValueError(f"unknown backend {name!r}")
    _modules[name] = mod
    return mod


def _default_backend() -> str:
    requested = os.environ.get(_ENV_BACKEND, "").strip().lower()
    if requested in ("numba", "numpy"):
        if requested == "numba" and _try_load("numba") is None:
            warnings.warn("CCVRADAR_BACKEND=numba but numba is not importable; "
                          "falling back to numpy")
            return "numpy"
        return requested
    if requested:
        warnings.warn(f"ignoring unknown {_ENV_BACKEND}={requested!r}")
    if _try_load("numba") is not None:
        return "numba"
    warnings.warn("numba not importable; using the pure-numpy kernel backend")
    return "numpy"


def get_backend() -> str:
    global _active
    if _active is None:
        set_backend(_default_backend())
    return _active


def set_backend(name: str) -> str:
    """Select the kernel backend; returns the previously active name."""
    global _active
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    mod = _try_load(name)
    if mod is None:
        raise RuntimeError(f"backend {name!r} is not available")
    previous = _active
    if name == "numba":
        threads = os.environ.get(_ENV_THREADS, "").strip()
        if threads:
            import numba
            numba.set_num_threads(max(1, int(threads)))
    _active = name
    return previous if previous is not None else name


def kernels():
    """The module implementing the active backend's map kernels."""
    return _modules[get_backend()]

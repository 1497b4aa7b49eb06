"""Backend selection for the compiled sparse kernels.

Kernels are written once in the numba-compatible subset of Python and
compiled with ``numba.njit``.  Setting ``DCSC_BACKEND=numpy`` (or running
without numba installed) routes every dispatcher to the pure-numpy
fallback instead.  The backend can also be switched at runtime with
:func:`use_backend`, which the test-suite and benchmarks rely on.
"""
from __future__ import annotations

import contextlib
import os

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency in CI
    numba = None
    HAVE_NUMBA = False

_BACKENDS = ("numba", "numpy")


def _initial_backend() -> str:
    requested = os.environ.get("DCSC_BACKEND", "").strip().lower()
    if requested and requested not in _BACKENDS:
        raise ValueError(f"DCSC_BACKEND must be one of {_BACKENDS}, got {requested!r}")
    if requested == "numpy" or not HAVE_NUMBA:
        return "numpy"
    return "numba"


_state = {"backend": _initial_backend()}


def njit(*args, **kwargs):
    """``numba.njit`` when numba is importable, otherwise a no-op decorator.

    Returned functions always expose ``py_func`` so callers can reach the
    uncompiled body.
    """
    if HAVE_NUMBA:
        kwargs.setdefault("cache", True)
        kwargs.setdefault("nogil", True)
        return numba.njit(*args, **kwargs)

    def wrap(fn):
        fn.py_func = fn
        return fn

    if args and callable(args[0]):
        return wrap(args[0])
    return wrap


def backend() -> str:
    return _state["backend"]


def using_numba() -> bool:
    return _state["backend"] == "numba"


def set_backend(name: str) -> None:
    name = name.lower()
    if name not in _BACKENDS:
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba is not installed")
    _state["backend"] = name


@contextlib.contextmanager
def use_backend(name: str):
    previous = backend()
    set_backend(name)
    try:
        yield
    finally:
        _state["backend"] = previous

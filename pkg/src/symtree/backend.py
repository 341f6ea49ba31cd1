"""Compute backend selection.

The compiled extension is preferred when importable; the numpy fallback is
bit-compatible with it (see :mod:`symtree._pykernels`).  ``SYMTREE_BACKEND``
forces the choice: ``compiled`` raises if the extension is missing,
``python`` skips it.  :func:`use` switches at runtime (benchmarks, parity
tests).
"""

from __future__ import annotations

import os
from types import SimpleNamespace

import numpy as np

from . import _pykernels
from .flatnet import FlatLayer


def _python_backend() -> SimpleNamespace:
    return SimpleNamespace(
        name="python",
        net_sum=_pykernels.net_sum,
        net_max=_pykernels.net_max,
        bounds_sum=_pykernels.bounds_sum,
        bounds_max=_pykernels.bounds_max,
        seg_absmax=_pykernels.seg_absmax,
        seg_argmax=_pykernels.seg_argmax,
    )


def _compiled_backend() -> SimpleNamespace:
    from . import _kernels as k

    return SimpleNamespace(
        name="compiled",
        net_sum=lambda fl, x: k.net_sum(fl.indptr, fl.src, fl.w, fl.bias, x),
        net_max=lambda fl, x: k.net_max(fl.indptr, fl.src, fl.w, x),
        bounds_sum=lambda fl, lo, hi: k.bounds_sum(
            fl.indptr, fl.src, fl.w, fl.bias, lo, hi
        ),
        bounds_max=lambda fl, lo, hi: k.bounds_max(fl.indptr, fl.src, fl.w, lo, hi),
        seg_absmax=lambda fl, vals: k.seg_absmax(fl.indptr, vals),
        seg_argmax=lambda fl, vals: k.seg_argmax(fl.indptr, vals),
    )


def available() -> list[str]:
    names = ["python"]
    try:
        from . import _kernels  # noqa: F401

        names.insert(0, "compiled")
    except ImportError:
        pass
    return names


def _select_initial() -> SimpleNamespace:
    choice = os.environ.get("SYMTREE_BACKEND", "auto")
    if choice not in ("auto", "compiled", "python"):
        raise ValueError(f"SYMTREE_BACKEND must be auto|compiled|python, got {choice!r}")
    if choice == "python":
        return _python_backend()
    try:
        return _compiled_backend()
    except ImportError:
        if choice == "compiled":
            raise
        return _python_backend()


_active = _select_initial()


def use(name: str) -> None:
    """Switch the active backend ('compiled', 'python', or 'auto')."""
    global _active
    if name == "python":
        _active = _python_backend()
    elif name == "compiled":
        _active = _compiled_backend()
    elif name == "auto":
        try:
            _active = _compiled_backend()
        except ImportError:
            _active = _python_backend()
    else:
        raise ValueError(f"unknown backend {name!r}")


def backend_name() -> str:
    return _active.name


def net_sum(fl: FlatLayer, x: np.ndarray) -> np.ndarray:
    return _active.net_sum(fl, x)


def net_max(fl: FlatLayer, x: np.ndarray) -> np.ndarray:
    return _active.net_max(fl, x)


def bounds_sum(fl: FlatLayer, lo: np.ndarray, hi: np.ndarray):
    return _active.bounds_sum(fl, lo, hi)


def bounds_max(fl: FlatLayer, lo: np.ndarray, hi: np.ndarray):
    return _active.bounds_max(fl, lo, hi)


def seg_absmax(fl: FlatLayer, vals: np.ndarray) -> np.ndarray:
    return _active.seg_absmax(fl, vals)


def seg_argmax(fl: FlatLayer, vals: np.ndarray) -> np.ndarray:
    return _active.seg_argmax(fl, vals)

"""Kernel dispatch: the compiled extension when importable, else numpy.

Set ``ABDISK_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels
if not os.environ.get("ABDISK_PURE_PYTHON"):
    try:
        from . import _ckernels as _impl  # noqa: F811
        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _pykernels

element_matrices = _impl.element_matrices
tridiagonalize = _impl.tridiagonalize
tql2 = _impl.tql2


def backend_module(name):
    """Return the kernel module for ``name`` in {"python", "cython"}."""
    if name == "python":
        return _pykernels
    if name == "cython":
        from . import _ckernels
        return _ckernels
    raise ValueError(f"unknown kernel backend {name!r}")

"""Aharonov-Bohm eigenvalues on the unit disk with half-integer flux, computed
through mixed Dirichlet-Neumann problems on the upper half-disk."""
from .kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"
__all__ = ["KERNEL_BACKEND", "__version__"]

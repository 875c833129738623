"""Simulator of a nonlinear-optics high-dimensional teleportation channel."""
from ._kernels import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]

"""Once-reinforced random walks on cylinders Z x Gamma."""

from .kernels import BACKEND

__all__ = ["BACKEND"]
__version__ = "0.1.0"

"""gaelforge: corpus pipeline and evaluation harness for adapting a
large language model to a low-resource language at desk scale."""

from ._kernels import BACKEND as kernel_backend

__version__ = "0.1.0"
__all__ = ["kernel_backend", "__version__"]

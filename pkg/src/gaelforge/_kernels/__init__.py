"""Kernel backend selection.

Imports the compiled Cython kernels when available, otherwise the
pure-Python fallback. Set GAELFORGE_PURE=1 to force the fallback (the
single-threaded reference path used by oracle tests and goldens).
"""

import os

from . import pyfallback

if os.environ.get("GAELFORGE_PURE"):
    _impl = pyfallback
    BACKEND = "python"
else:
    try:
        from . import _fast as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = pyfallback
        BACKEND = "python"

fnv1a64 = _impl.fnv1a64
shingle_hashes = _impl.shingle_hashes
bpe_merge_word = _impl.bpe_merge_word
FNV_OFFSET = pyfallback.FNV_OFFSET
FNV_PRIME = pyfallback.FNV_PRIME

"""Kernel backend dispatch.

The compiled Cython extension is preferred when importable; the NumPy
reference implementation is the fallback. Set CONCEPTREFINE_PURE_PYTHON=1
to force the fallback.
"""

import os

from . import pyref

if os.environ.get("CONCEPTREFINE_PURE_PYTHON"):
    _impl = pyref
    BACKEND = "numpy"
else:
    try:
        from . import _fast as _impl
        BACKEND = "compiled"
    except ImportError:
        _impl = pyref
        BACKEND = "numpy"

topk_supports = _impl.topk_supports
column_grads = _impl.column_grads

__all__ = ["BACKEND", "topk_supports", "column_grads", "pyref"]

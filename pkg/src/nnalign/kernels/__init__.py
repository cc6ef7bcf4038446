"""Lookup-table kernels with a compiled core and a numpy fallback.

The Cython extension is used when it was built; set ``NNALIGN_PURE_PYTHON=1``
to force the numpy implementation (useful for debugging and benchmarks).
"""

import os

if os.environ.get("NNALIGN_PURE_PYTHON"):
    from . import _numpy_impl as _impl
else:
    try:
        from . import _core as _impl  # type: ignore[no-redef]
    except ImportError:
        from . import _numpy_impl as _impl

BACKEND = _impl.BACKEND
gather_rows = _impl.gather_rows
scatter_add_rows = _impl.scatter_add_rows

__all__ = ["BACKEND", "gather_rows", "scatter_add_rows"]

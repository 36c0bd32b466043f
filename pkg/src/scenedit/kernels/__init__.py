"""Mask kernels with a compiled core and a numpy fallback.

The Cython extension is preferred when importable; set ``SCENEDIT_PURE_PYTHON=1``
to force the numpy implementation (useful for benchmarking and debugging).
``BACKEND`` reports which one is active.
"""

import os

if os.environ.get("SCENEDIT_PURE_PYTHON"):
    from . import _pure as _impl
else:
    try:
        from . import _core as _impl  # type: ignore[no-redef]
    except ImportError:
        from . import _pure as _impl  # type: ignore[no-redef]

BACKEND = _impl.BACKEND
rle_encode = _impl.rle_encode
rle_decode = _impl.rle_decode
inter_union = _impl.inter_union
dilate = _impl.dilate

__all__ = ["BACKEND", "rle_encode", "rle_decode", "inter_union", "dilate"]

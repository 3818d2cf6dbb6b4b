"""Backend selection for the raster kernels.

The compiled Cython module is used when it was built; otherwise the numpy
implementation is used. Set ``TINYTRACK_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("TINYTRACK_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels

label = _impl.label
binarize_tiles = _impl.binarize_tiles
grow_region = _impl.grow_region
ssim_map = _impl.ssim_map

__all__ = ["BACKEND", "label", "binarize_tiles", "grow_region", "ssim_map"]

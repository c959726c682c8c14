"""Kernel dispatch: compiled extension when importable, numpy fallback otherwise.

Set DETBENCH_PURE_PYTHON=1 to force the fallback. Both backends implement
identical semantics; `benchmarks/kernel_bench.py` compares their speed.
"""

from __future__ import annotations

import os

from . import _kernels_py

_impl = _kernels_py
BACKEND = "python"

if not os.environ.get("DETBENCH_PURE_PYTHON"):
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        pass

blend_u8 = _impl.blend_u8
iou_matrix = _impl.iou_matrix
nms_keep = _impl.nms_keep
match_greedy = _impl.match_greedy


def backend_name() -> str:
    """Which kernel backend this process is using."""
    return BACKEND

"""Kernel backend selection.

The compiled extension (``wbctl._speedups``, Cython) and the pure-numpy
module (``wbctl._kernels_py``) implement the same five functions. The
compiled one is preferred when importable; set ``WBCTL_PURE_PYTHON=1``
before import to force the fallback. ``benchmarks/bench_kernels.py``
compares the two.
"""

import os

if os.environ.get("WBCTL_PURE_PYTHON"):
    from . import _kernels_py as _impl
else:
    try:
        from . import _speedups as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _kernels_py as _impl

BACKEND = _impl.BACKEND_NAME

ee_pose = _impl.ee_pose
com_positions = _impl.com_positions
jacobian_arm = _impl.jacobian_arm
mass_matrix_arm = _impl.mass_matrix_arm
rnea_arm = _impl.rnea_arm


def backend_name() -> str:
    """Which kernel implementation is active ('compiled' or 'python')."""
    return BACKEND

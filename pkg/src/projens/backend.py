"""Kernel backend selection.

The compiled Cython kernels are used when available; setting the
environment variable PROJENS_PURE_PYTHON=1 forces the numpy fallback.
Both backends are bit-identical (same accumulation order, no FMA).
"""

import os

from . import _kernels_py

if os.environ.get("PROJENS_PURE_PYTHON", "0") == "1":
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

apply_two_qubit = _impl.apply_two_qubit
apply_one_qubit = _impl.apply_one_qubit

"""Kernel backend selection.

The hot numeric kernels (IoU matrices, assignment solver) are compiled with
numba when it is available. Setting the environment variable
``TETAEVAL_NO_NUMBA=1`` before import forces the pure NumPy/Python fallback,
which runs the exact same code paths uncompiled and produces bit-identical
results.
"""

import os

_DISABLED = os.environ.get("TETAEVAL_NO_NUMBA", "").strip().lower() in (
    "1",
    "true",
    "yes",
)

if _DISABLED:
    NUMBA_ENABLED = False
else:
    try:
        from numba import njit as _njit

        NUMBA_ENABLED = True
    except ImportError:
        NUMBA_ENABLED = False


def jit_kernel(func):
    """Compile ``func`` with numba when the numba backend is active."""
    if NUMBA_ENABLED:
        return _njit(cache=True, nogil=True)(func)
    return func


def backend_name():
    return "numba" if NUMBA_ENABLED else "numpy"

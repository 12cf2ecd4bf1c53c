"""Kernel compilation switch.

The hot simulation kernels in kernels.py are written as plain Python over
numpy arrays and compiled with numba's @njit by default. Setting
NVCACHESIM_NO_JIT=1 (or any of 1/true/yes/on) before import skips the
compilation and runs the identical functions as pure Python; the same
happens automatically when numba is not importable. Results are
bit-identical in both modes, only speed differs (see benchmarks/).
"""

import os

_TRUTHY = {"1", "true", "yes", "on"}


def _detect() -> bool:
    if os.environ.get("NVCACHESIM_NO_JIT", "").strip().lower() in _TRUTHY:
        return False
    try:
        import numba  # noqa: F401
    except Exception:
        return False
    return True


JIT_ENABLED = _detect()


def jit_enabled() -> bool:
    """Report whether the kernels were compiled with numba at import time."""
    return JIT_ENABLED

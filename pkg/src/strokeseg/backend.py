"""Kernel backend selection.

Every hot numeric kernel in :mod:`strokeseg.kernels` ships in two variants:
a numba-jitted loop version and a pure-numpy vectorized twin. The active
variant is chosen at import time from the ``STROKESEG_BACKEND`` environment
variable (``"numba"`` or ``"numpy"``; default is numba when importable) and
can be switched at runtime, which the test suite and the kernel benchmark
use to exercise both paths.
"""

import os

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        # identity decorator so kernel modules still import without numba
        def wrap(fn):
            return fn

        if args and callable(args[0]) and len(args) == 1 and not kwargs:
            return args[0]
        return wrap


_VALID = ("numba", "numpy")

_env = os.environ.get("STROKESEG_BACKEND", "").strip().lower()
if _env and _env not in _VALID:
    raise ValueError(
        f"STROKESEG_BACKEND must be one of {_VALID}, got {_env!r}"
    )
_active = "numpy" if (_env == "numpy" or not HAVE_NUMBA) else "numba"


def active_backend() -> str:
    """Name of the kernel backend currently in use."""
    return _active


def use_numba() -> bool:
    return _active == "numba"


def set_backend(name: str) -> str:
    """Switch kernel backend at runtime; returns the previous backend."""
    global _active
    if name not in _VALID:
        raise ValueError(f"backend must be one of {_VALID}, got {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is not installed")
    previous = _active
    _active = name
    return previous

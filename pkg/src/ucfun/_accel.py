"""Backend selection for the numeric kernels.

The numba kernels are used when numba imports cleanly and the environment
variable ``UCFUN_DISABLE_NUMBA`` is unset (or ``0``/``false``). Otherwise the
vectorised numpy implementations in :mod:`ucfun.kernels._numpy` are used.
"""

from __future__ import annotations

import os

_FALSY = {"", "0", "false", "no", "off"}


def numba_disabled() -> bool:
    return os.environ.get("UCFUN_DISABLE_NUMBA", "").strip().lower() not in _FALSY


try:
    import numba  # noqa: F401

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not numba_disabled()
BACKEND = "numba" if USE_NUMBA else "numpy"

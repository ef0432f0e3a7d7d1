"""Backend selection for the factorization inner loop.

The compiled kernel is preferred when the extension built; the NumPy twin is
the fallback. ``POSTURESYN_KERNEL=numpy|cython`` forces a choice (useful for
benchmarks and debugging).
"""

from __future__ import annotations

import os

from . import _mu_numpy

_forced = os.environ.get("POSTURESYN_KERNEL", "").lower()

if _forced == "numpy":
    _impl = _mu_numpy
    BACKEND = "numpy"
else:
    try:
        from . import _mu_cy as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        if _forced == "cython":
            raise ImportError(
                "POSTURESYN_KERNEL=cython but the compiled kernel is not built"
            )
        _impl = _mu_numpy
        BACKEND = "numpy"

mu_factorize = _impl.mu_factorize

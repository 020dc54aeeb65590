"""Fading-draw kernels with import-time backend selection.

``exact_tail_stats`` streams element-level Rayleigh draws for the composite
channel and accumulates tail counts and Z^2 moments.  The compiled extension
(``_fading``) and the numpy fallback consume the *same* ziggurat exponential
stream from the same bit generator, so they produce identical draw values;
only last-ulp accumulation order differs.  Set IRSPLAN_FORCE_FALLBACK=1 to
force the numpy path.
"""

import os

from . import numpy_backend

_FORCE_FALLBACK = os.environ.get("IRSPLAN_FORCE_FALLBACK", "") not in ("", "0")

if not _FORCE_FALLBACK:
    try:
        from . import _fading as _impl
        BACKEND = "compiled"
    except ImportError:
        _impl = numpy_backend
        BACKEND = "numpy"
else:
    _impl = numpy_backend
    BACKEND = "numpy"

exact_tail_stats = _impl.exact_tail_stats
exact_tail_stats_numpy = numpy_backend.exact_tail_stats

__all__ = ["BACKEND", "exact_tail_stats", "exact_tail_stats_numpy"]

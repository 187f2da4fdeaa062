"""Channel-scan kernel with a compiled core and a pure-python fallback.

The compiled extension (``_scan``, built from ``_scan.pyx``) is selected at
import when available; otherwise the numpy implementation in ``fallback``
is used.  Set ``VOIKIT_BACKEND=python`` to force the fallback, e.g. for
benchmarking the two against each other.
"""

import os

from . import fallback
from .fallback import (
    GEN_CHI2,
    GEN_HELLINGER,
    GEN_KL,
    GEN_TV,
    M_ARIMOTO,
    M_ARIMOTO_INF,
    M_F_INFO,
    M_F_LEAK_CHI2,
    M_F_LEAK_HELLINGER,
    M_GAIN_AVG,
    M_GAIN_MAX,
    M_MAXCOST,
    M_MMSE,
    M_SHANNON,
    M_SIBSON,
    M_SIBSON_INF,
    O_EXPECTED,
    O_POSTRISK,
    O_POSTRISK_ALPHA,
)

_impl = None
if os.environ.get("VOIKIT_BACKEND", "").lower() not in ("python", "fallback"):
    try:
        from . import _scan as _impl  # type: ignore[attr-defined]
    except ImportError:
        _impl = None
if _impl is None:
    _impl = fallback

BACKEND_NAME = _impl.BACKEND_NAME
scan_channels = _impl.scan_channels


def available_backends() -> dict:
    """Mapping backend name -> scan function, for tests and benchmarks."""
    out = {"python": fallback.scan_channels}
    try:
        from . import _scan

        out["cython"] = _scan.scan_channels
    except ImportError:
        pass
    return out

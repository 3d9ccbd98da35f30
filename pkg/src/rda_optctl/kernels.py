"""Select the time-marching backend at import.

The compiled extension is used when it was built; setting
``RDA_OPTCTL_PURE_PYTHON=1`` forces the numpy fallback.
"""

import os

from . import _pykernels

BACKENDS = {"python": _pykernels}

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None
else:
    BACKENDS["cython"] = _ckernels

if _ckernels is not None and os.environ.get("RDA_OPTCTL_PURE_PYTHON", "") not in ("1", "true", "yes"):
    BACKEND = "cython"
else:
    BACKEND = "python"

_active = BACKENDS[BACKEND]


def get(name: str | None = None):
    """Kernel module for ``name`` (default: the active backend)."""
    if name is None:
        return _active
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} unavailable; have {sorted(BACKENDS)}") from None


def available() -> list[str]:
    return sorted(BACKENDS)

"""Kernel backend selection: compiled extension with NumPy fallback.

The compiled Cython module gives the hot inner loops (spring and pressure
accumulation, enclosed measures); the pure backend implements the same
contracts with NumPy.  The active backend is chosen at import time:

* ``SOFTBODY_KERNELS=pure`` or ``SOFTBODY_KERNELS=compiled`` forces one;
* otherwise the compiled backend is used when the extension imported.

``use_backend()`` rebinds the module-level functions (used by the
benchmark and the parity tests).
"""

import logging
import os

from . import pure

logger = logging.getLogger(__name__)

try:
    from . import _core
except ImportError:  # extension not built; NumPy fallback only
    _core = None

_BACKENDS = {"pure": pure}
if _core is not None:
    _BACKENDS["compiled"] = _core

_KERNEL_NAMES = (
    "spring_forces",
    "enclosed_area",
    "enclosed_volume",
    "pressure_forces_2d",
    "pressure_forces_3d",
)

active = pure


def available_backends() -> dict:
    """Mapping of backend name to implementing module."""
    return dict(_BACKENDS)


def backend_name() -> str:
    return active.NAME


def use_backend(name: str):
    """Switch the active backend; returns the previous backend's name."""
    global active
    if name not in _BACKENDS:
        raise ValueError(f"unknown kernel backend {name!r}; have {sorted(_BACKENDS)}")
    previous = active.NAME
    active = _BACKENDS[name]
    mod_globals = globals()
    for fn in _KERNEL_NAMES:
        mod_globals[fn] = getattr(active, fn)
    return previous


_requested = os.environ.get("SOFTBODY_KERNELS")
if _requested:
    if _requested not in _BACKENDS:
        logger.warning(
            "SOFTBODY_KERNELS=%r not available (have %s); using fallback selection",
            _requested,
            sorted(_BACKENDS),
        )
        _requested = None
if _requested is None:
    _requested = "compiled" if "compiled" in _BACKENDS else "pure"
use_backend(_requested)

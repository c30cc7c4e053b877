"""Kernel backend selection.

The compiled extension is used when it imports; set ``RADIALITY_PURE_PYTHON=1``
to force the pure-Python fallback.
"""

from __future__ import annotations

import os
from types import ModuleType

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # pragma: no cover - depends on the build
    _ckernels = None

BACKENDS: dict[str, ModuleType] = {"python": _pykernels}
if _ckernels is not None:
    BACKENDS["cython"] = _ckernels

if os.environ.get("RADIALITY_PURE_PYTHON") or _ckernels is None:
    BACKEND = "python"
else:
    BACKEND = "cython"

_active = BACKENDS[BACKEND]


def use(name: str) -> None:
    """Switch the process-wide backend ("python" or "cython")."""
    global BACKEND, _active
    if name not in BACKENDS:
        raise ValueError(f"kernel backend {name!r} is not available; have {sorted(BACKENDS)}")
    BACKEND = name
    _active = BACKENDS[name]


def sweep_tree(*args):
    return _active.sweep_tree(*args)


def propagate_bounds(*args):
    return _active.propagate_bounds(*args)


def enumerate_forests(*args):
    return _active.enumerate_forests(*args)


def forest_sweep(*args):
    return _active.forest_sweep(*args)


def forced_closures(*args):
    return _active.forced_closures(*args)


def flow_energy(*args):
    return _active.flow_energy(*args)


def flow_resistance_diag(*args):
    return _active.flow_resistance_diag(*args)

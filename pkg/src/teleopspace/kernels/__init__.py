"""Kernel backend selection.

The hot loops (grasp closing, wrench-hull support sampling, hypothesis
scanning) exist twice: a Cython extension and a pure-Python reference. The
compiled one is used when present; set TELEOPSPACE_PURE=1 to force the
reference. `benchmarks/bench_kernels.py` compares the two.
"""

from __future__ import annotations

import os

from . import reference
from .packing import PackedHand, pack_hand

CONTACT_TOL = reference.CONTACT_TOL
PENETRATION_LIMIT = reference.PENETRATION_LIMIT
STATUS_OK = reference.STATUS_OK
STATUS_PREGRASP_COLLISION = reference.STATUS_PREGRASP_COLLISION
STATUS_CLOSING_COLLISION = reference.STATUS_CLOSING_COLLISION
PERMS = reference.PERMS

if os.environ.get("TELEOPSPACE_PURE"):
    _impl = reference
else:
    try:
        from . import _compiled as _impl  # type: ignore[attr-defined]
    except ImportError:
        _impl = reference

BACKEND = _impl.BACKEND_NAME

close_fingers = _impl.close_fingers
wrench_quality = _impl.wrench_quality
ransac_scan = _impl.ransac_scan


def get_backend(name: str):
    """Fetch a backend module by name ('python' or 'compiled'); None if absent."""
    if name == "python":
        return reference
    if name == "compiled":
        try:
            from . import _compiled  # type: ignore[attr-defined]

            return _compiled
        except ImportError:
            return None
    raise ValueError(f"unknown backend '{name}'")

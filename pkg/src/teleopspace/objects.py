"""The canonical 8-object set and grasp-primitive geometry.

The set pairs disks and boxes, in sizes chosen so that grasping them sweeps
the subspace axes, with a mandated grasp type per object; two size/shape
duplicates differ only in grasp type and therefore in curl. Dimensions are
millimeters sized to a reference human hand and are multiplied by the hand's
scale ratio before grasp planning. Objects lie flat: thickness along the palm
approach axis (+z), long box axis along palm y.

Geometry helpers return signed distance to the primitive surface (negative
inside), the closest surface point, and the outward normal, in object-centered
meters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

DISK = 0
BOX = 1


@dataclass(frozen=True)
class ObjectSpec:
    id: int
    primitive: str  # "disk" | "box"
    dims: tuple[float, float, float]  # mm
    grasp_type: str  # "power" | "precision"
    predicted_psi: tuple[float, float, float]  # (spread, size, curl)


_BASE_SET = (
    (1, "disk", (70, 70, 10), "precision", (1.0, 0.5, 0.0)),
    (2, "disk", (110, 110, 10), "precision", (1.0, 1.0, 0.0)),
    (3, "box", (45, 300, 10), "precision", (0.0, 0.0, 0.0)),
    (4, "box", (70, 300, 10), "precision", (0.0, 0.5, 0.0)),
    (5, "box", (100, 300, 10), "precision", (0.0, 1.0, 0.0)),
    (6, "disk", (70, 70, 10), "power", (1.0, 0.5, 1.0)),
    (7, "box", (45, 300, 10), "power", (0.0, 0.0, 1.0)),
    (8, "box", (70, 300, 10), "power", (0.0, 0.5, 1.0)),
)


def canonical_object_set(hand_scale: float) -> list[ObjectSpec]:
    """The 8 canonical objects with dimensions scaled to the hand."""
    if hand_scale <= 0:
        raise ValueError(f"hand_scale must be positive, got {hand_scale}")
    return [
        ObjectSpec(
            id=i,
            primitive=prim,
            dims=tuple(d * hand_scale for d in dims),
            grasp_type=gt,
            predicted_psi=psi,
        )
        for i, prim, dims, gt, psi in _BASE_SET
    ]


def object_params(spec: ObjectSpec) -> tuple[int, float, float, float]:
    """Numeric primitive parameters in meters for the contact kernels.

    Disk: (DISK, radius, half_height, 0). Box: (BOX, hx, hy, hz).
    """
    x, y, z = (d / 1000.0 for d in spec.dims)
    if spec.primitive == "disk":
        return (DISK, x / 2.0, z / 2.0, 0.0)
    if spec.primitive == "box":
        return (BOX, x / 2.0, y / 2.0, z / 2.0)
    raise ValueError(f"unknown primitive '{spec.primitive}'")


def grasp_width_m(spec: ObjectSpec) -> float:
    """Lateral span a hand must cover: disk diameter or short box side, meters."""
    return spec.dims[0] / 1000.0


def box_surface(p, half) -> tuple[float, np.ndarray, np.ndarray]:
    """Signed distance, closest surface point, outward normal for a box."""
    p = np.asarray(p, dtype=float)
    half = np.asarray(half, dtype=float)
    q = np.abs(p) - half
    if (q > 0).any():
        closest = np.clip(p, -half, half)
        diff = p - closest
        d = math.sqrt(diff[0] ** 2 + diff[1] ** 2 + diff[2] ** 2)
        return d, closest, diff / d
    k = int(np.argmax(q))
    s = 1.0 if p[k] >= 0 else -1.0
    normal = np.zeros(3)
    normal[k] = s
    closest = p.copy()
    closest[k] = s * half[k]
    return q[k], closest, normal


def disk_surface(p, radius: float, half_h: float) -> tuple[float, np.ndarray, np.ndarray]:
    """Signed distance, closest surface point, outward normal for a disk (z-axis cylinder)."""
    p = np.asarray(p, dtype=float)
    rho = math.hypot(p[0], p[1])
    dr = rho - radius
    dz = abs(p[2]) - half_h
    sz = 1.0 if p[2] >= 0 else -1.0
    if rho > 0:
        ux, uy = p[0] / rho, p[1] / rho
    else:
        ux, uy = 1.0, 0.0
    if dr > 0 or dz > 0:
        a = max(dr, 0.0)
        b = max(dz, 0.0)
        d = math.hypot(a, b)
        closest = np.array(
            [ux * min(rho, radius), uy * min(rho, radius), sz * min(abs(p[2]), half_h)]
        )
        normal = np.array([a * ux / d, a * uy / d, b * sz / d])
        return d, closest, normal
    if dz >= dr:
        return dz, np.array([p[0], p[1], sz * half_h]), np.array([0.0, 0.0, sz])
    return dr, np.array([ux * radius, uy * radius, p[2]]), np.array([ux, uy, 0.0])


def surface_point(kind: int, pa: float, pb: float, pc: float, p):
    """Dispatch on packed params from object_params."""
    if kind == DISK:
        return disk_surface(p, pa, pb)
    return box_surface(p, (pa, pb, pc))

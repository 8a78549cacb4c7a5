"""Build a mapping from a human-authored motion assignment.

The author of the mapping declares, winner-take-all, which joints spread the
fingers, which open the hand, and which curl the fingers; a joint may serve
only one motion. Signs let a joint whose value decreases during a motion
still contribute. Columns are the signed indicator vectors normalized to unit
length; scaling comes from user-supplied extrema poses per axis.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .hands import HandModel, as_pose
from .subspace import AXES, TeleopMapping, compute_scaling


@dataclass(frozen=True)
class MotionAssignment:
    """Signed joint sets for the spread / size / curl motions."""

    spread: dict[int, int] = field(default_factory=dict)
    size: dict[int, int] = field(default_factory=dict)
    curl: dict[int, int] = field(default_factory=dict)

    def per_axis(self) -> tuple[dict[int, int], dict[int, int], dict[int, int]]:
        return self.spread, self.size, self.curl


@dataclass(frozen=True)
class ExtremaPoses:
    """Poses exhibiting each axis's kinematic extremes, one list per axis."""

    spread: tuple = ()
    size: tuple = ()
    curl: tuple = ()

    def per_axis(self):
        return self.spread, self.size, self.curl

    def pooled(self) -> list:
        return [*self.spread, *self.size, *self.curl]


def build_projection_matrix(n_joints: int, assign: MotionAssignment) -> np.ndarray:
    """Signed, normalized indicator columns; an empty motion gives a zero column."""
    cols = assign.per_axis()
    used = {}
    for axis_name, col in zip(AXES, cols):
        for j, sign in col.items():
            if not (0 <= j < n_joints):
                raise ValueError(f"{axis_name}: joint index {j} out of range for N={n_joints}")
            if sign not in (1, -1):
                raise ValueError(f"{axis_name}: sign for joint {j} must be +1 or -1")
            if j in used:
                raise ValueError(
                    f"joint {j} assigned to both {used[j]} and {axis_name}; "
                    "a joint may serve only one motion"
                )
            used[j] = axis_name
    A = np.zeros((n_joints, 3))
    for k, col in enumerate(cols):
        for j, sign in col.items():
            A[j, k] = float(sign)
        n = np.linalg.norm(A[:, k])
        if n > 0:
            A[:, k] /= n
    return A


def build_empirical_mapping(
    model: HandModel,
    origin,
    assign: MotionAssignment,
    extrema: ExtremaPoses,
) -> TeleopMapping:
    """Assemble origin, projection matrix, and scaling into a mapping."""
    origin = as_pose(model, origin)
    lo, hi = model.joint_min, model.joint_max
    if ((origin < lo) | (origin > hi)).any():
        raise ValueError("origin pose violates joint limits")
    A = build_projection_matrix(model.dof, assign)
    per_axis = extrema.per_axis()
    for k in range(3):
        if np.linalg.norm(A[:, k]) > 0 and len(per_axis[k]) == 0:
            raise ValueError(f"no extrema poses supplied for nonzero {AXES[k]} axis")
    pooled = [as_pose(model, p) for p in extrema.pooled()]
    for p in pooled:
        if ((p < lo) | (p > hi)).any():
            raise ValueError("extrema pose violates joint limits")
    delta, delta_star, notes = compute_scaling(origin, A, pooled)
    provenance = {"method": "empirical", "seed": None, "dataset_digest": None}
    if notes:
        provenance["notes"] = notes
    return TeleopMapping(
        hand_id=model.hand_id,
        dof=model.dof,
        origin=origin,
        A=A,
        delta=delta,
        delta_star=delta_star,
        provenance=provenance,
    )

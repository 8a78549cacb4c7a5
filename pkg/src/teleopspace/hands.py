"""Parametric articulated hand models, joint poses, and forward kinematics.

A hand is a rigid palm with serial revolute-chain fingers. Each link rotates
about its joint's axis (given in the parent frame) and then extends along the
rotated local +x. Coupled joints (one actuator driving several links) are
expressed by letting multiple links share a joint index. Angles are radians,
lengths are meters; the palm approach direction is the palm frame's +z.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

UNIT_TOL = 1e-9


@dataclass(frozen=True)
class JointSpec:
    name: str
    min: float
    max: float


@dataclass(frozen=True)
class LinkSpec:
    length: float
    joint_index: int
    axis: tuple[float, float, float]


@dataclass(frozen=True)
class FingerChain:
    name: str
    base_pos: tuple[float, float, float]
    base_quat: tuple[float, float, float, float]  # (w, x, y, z)
    links: tuple[LinkSpec, ...]


@dataclass(frozen=True)
class HandModel:
    hand_id: str
    dof: int
    scale: float
    joints: tuple[JointSpec, ...]
    fingers: tuple[FingerChain, ...]

    @property
    def joint_min(self) -> np.ndarray:
        return np.array([j.min for j in self.joints], dtype=float)

    @property
    def joint_max(self) -> np.ndarray:
        return np.array([j.max for j in self.joints], dtype=float)


@dataclass(frozen=True)
class FingerFK:
    """FK result for one finger: link-end frames, base-to-tip."""

    name: str
    transforms: tuple[np.ndarray, ...]  # 4x4, one per link, frame at link end
    fingertip: np.ndarray  # 3-vector, palm frame


def quat_to_matrix(quat) -> np.ndarray:
    """Rotation matrix from a (w, x, y, z) quaternion. Must be unit norm."""
    w, x, y, z = (float(v) for v in quat)
    n = math.sqrt(w * w + x * x + y * y + z * z)
    if abs(n - 1.0) > 1e-6:
        raise ValueError(f"quaternion norm {n:.9f} is not 1")
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ],
        dtype=float,
    )


def axis_angle_matrix(axis, angle: float) -> np.ndarray:
    """Rodrigues rotation about a unit axis."""
    ux, uy, uz = (float(v) for v in axis)
    c = math.cos(angle)
    s = math.sin(angle)
    t = 1.0 - c
    return np.array(
        [
            [c + ux * ux * t, ux * uy * t - uz * s, ux * uz * t + uy * s],
            [uy * ux * t + uz * s, c + uy * uy * t, uy * uz * t - ux * s],
            [uz * ux * t - uy * s, uz * uy * t + ux * s, c + uz * uz * t],
        ],
        dtype=float,
    )


def as_pose(model: HandModel, q) -> np.ndarray:
    """Coerce to a float64 joint vector of the model's dof."""
    arr = np.asarray(q, dtype=float)
    if arr.shape != (model.dof,):
        raise ValueError(
            f"pose has shape {arr.shape}, expected ({model.dof},) for hand '{model.hand_id}'"
        )
    return arr


def validate_model(model: HandModel) -> list[str]:
    """Check every structural invariant; violations are data, not failures."""
    bad = []
    if model.dof <= 0:
        bad.append(f"dof: must be positive, got {model.dof}")
    if model.scale <= 0:
        bad.append(f"scale: must be positive, got {model.scale}")
    if len(model.joints) != model.dof:
        bad.append(f"joints: expected {model.dof} entries, got {len(model.joints)}")
    seen = set()
    for j in model.joints:
        if j.name in seen:
            bad.append(f"joint '{j.name}': duplicate name")
        seen.add(j.name)
        if j.min > j.max:
            bad.append(f"joint '{j.name}': min {j.min} > max {j.max}")
    referenced = set()
    for f in model.fingers:
        w, x, y, z = f.base_quat
        if abs(math.sqrt(w * w + x * x + y * y + z * z) - 1.0) > UNIT_TOL:
            bad.append(f"finger '{f.name}': base quaternion is not unit norm")
        if not f.links:
            bad.append(f"finger '{f.name}': no links")
        for i, link in enumerate(f.links):
            if link.length <= 0:
                bad.append(f"finger '{f.name}' link {i}: length must be > 0")
            if not (0 <= link.joint_index < model.dof):
                bad.append(
                    f"finger '{f.name}' link {i}: joint_index {link.joint_index} out of range"
                )
            else:
                referenced.add(link.joint_index)
            ax = np.asarray(link.axis, dtype=float)
            if abs(np.linalg.norm(ax) - 1.0) > UNIT_TOL:
                bad.append(f"finger '{f.name}' link {i}: axis is not unit norm")
    for idx in range(model.dof):
        if idx not in referenced and len(model.joints) == model.dof:
            bad.append(f"joint '{model.joints[idx].name}': not referenced by any link")
    return bad


def forward_kinematics(model: HandModel, q) -> list[FingerFK]:
    """Per-finger link frames and fingertip positions in the palm frame."""
    q = as_pose(model, q)
    out = []
    for finger in model.fingers:
        R = quat_to_matrix(finger.base_quat)
        p = np.asarray(finger.base_pos, dtype=float).copy()
        transforms = []
        for link in finger.links:
            R = R @ axis_angle_matrix(link.axis, q[link.joint_index])
            p = p + R @ np.array([link.length, 0.0, 0.0])
            T = np.eye(4)
            T[:3, :3] = R
            T[:3, 3] = p
            transforms.append(T)
        out.append(FingerFK(finger.name, tuple(transforms), transforms[-1][:3, 3].copy()))
    return out


def fk_segments(model: HandModel, q) -> list[list[tuple[np.ndarray, np.ndarray]]]:
    """Link segments (start, end) per finger, palm frame. One entry per link."""
    q = as_pose(model, q)
    out = []
    for finger in model.fingers:
        R = quat_to_matrix(finger.base_quat)
        p = np.asarray(finger.base_pos, dtype=float).copy()
        segs = []
        for link in finger.links:
            R = R @ axis_angle_matrix(link.axis, q[link.joint_index])
            p_next = p + R @ np.array([link.length, 0.0, 0.0])
            segs.append((p, p_next))
            p = p_next
        out.append(segs)
    return out


def clamp_to_limits(model: HandModel, q) -> tuple[np.ndarray, np.ndarray]:
    """Clamp each component into [min, max]; flags mark altered components."""
    q = as_pose(model, q)
    if np.isnan(q).any():
        raise ValueError("pose contains NaN")
    lo = model.joint_min
    hi = model.joint_max
    clamped = np.clip(q, lo, hi)
    return clamped, clamped != q

"""Comparison mappings: direct joint correspondence and fingertip retargeting.

Joint mapping copies master joint values onto corresponding slave joints and
clamps. Fingertip mapping runs master forward kinematics, scales each paired
fingertip in its finger's base frame, re-expresses the result under the slave
finger's base, and solves per-finger damped-least-squares IK with joint-limit
projection and a backtracking step so the Cartesian residual never increases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .hands import (
    HandModel,
    as_pose,
    axis_angle_matrix,
    clamp_to_limits,
    forward_kinematics,
    quat_to_matrix,
)


@dataclass(frozen=True)
class JointCorrespondence:
    master_hand: str
    slave_hand: str
    pairs: tuple[tuple[int, int], ...]  # (master_joint, slave_joint)


@dataclass(frozen=True)
class IkParams:
    max_iters: int = 200
    damping: float = 0.05
    tolerance: float = 1e-4  # meters


@dataclass(frozen=True)
class FingertipConfig:
    master_hand: str
    slave_hand: str
    finger_pairs: tuple[tuple[str, str], ...]  # (master finger, slave finger)
    scale: float = 1.5
    ik: IkParams = field(default_factory=IkParams)


def joint_map(
    corr: JointCorrespondence,
    q_master,
    slave_model: HandModel,
    slave_origin=None,
) -> tuple[np.ndarray, np.ndarray]:
    """Copy paired master values onto slave joints; unmapped joints pin to origin.

    Returns the clamped slave pose and per-joint clamp flags.
    """
    q_master = np.asarray(q_master, dtype=float)
    if slave_origin is None:
        slave_origin = clamp_to_limits(slave_model, np.zeros(slave_model.dof))[0]
    q_slave = as_pose(slave_model, slave_origin).copy()
    seen = set()
    for mi, si in corr.pairs:
        if not (0 <= mi < len(q_master)):
            raise ValueError(f"master joint index {mi} out of range")
        if not (0 <= si < slave_model.dof):
            raise ValueError(f"slave joint index {si} out of range")
        if si in seen:
            raise ValueError(f"slave joint {si} mapped twice")
        seen.add(si)
        q_slave[si] = q_master[mi]
    return clamp_to_limits(slave_model, q_slave)


def _finger_by_name(model: HandModel, name: str):
    for fi, f in enumerate(model.fingers):
        if f.name == name:
            return fi, f
    raise ValueError(f"hand '{model.hand_id}' has no finger named '{name}'")


def _finger_tip_and_jacobian(model: HandModel, q, finger):
    """Fingertip position and its Jacobian columns for the finger's joints."""
    R = quat_to_matrix(finger.base_quat)
    p = np.asarray(finger.base_pos, dtype=float).copy()
    origins = []
    axes = []
    joints = []
    for link in finger.links:
        axes.append(R @ np.asarray(link.axis, dtype=float))
        origins.append(p.copy())
        joints.append(link.joint_index)
        R = R @ axis_angle_matrix(link.axis, q[link.joint_index])
        p = p + R @ np.array([link.length, 0.0, 0.0])
    tip = p
    cols = {}
    for a, o, j in zip(axes, origins, joints):
        col = np.cross(a, tip - o)
        cols[j] = cols.get(j, 0.0) + col  # coupled links accumulate
    return tip, cols


def _solve_finger_ik(model, finger, target, q, own_joints, params: IkParams):
    """Damped least squares over the finger's own joints; returns residual."""
    lo, hi = model.joint_min, model.joint_max
    tip, _ = _finger_tip_and_jacobian(model, q, finger)
    err = target - tip
    res = float(np.linalg.norm(err))
    lam2 = params.damping * params.damping
    for _ in range(params.max_iters):
        if res < params.tolerance:
            break
        tip, cols = _finger_tip_and_jacobian(model, q, finger)
        J = np.stack([cols[j] for j in own_joints], axis=1)
        H = J.T @ J + lam2 * np.eye(len(own_joints))
        step = np.linalg.solve(H, J.T @ (target - tip))
        alpha = 1.0
        improved = False
        while alpha > 1e-6:
            trial = q.copy()
            for b, j in enumerate(own_joints):
                trial[j] = min(max(q[j] + alpha * step[b], lo[j]), hi[j])
            t_tip, _ = _finger_tip_and_jacobian(model, trial, finger)
            t_res = float(np.linalg.norm(target - t_tip))
            if t_res < res:
                q[:] = trial
                res = t_res
                improved = True
                break
            alpha *= 0.5
        if not improved:
            break
    return res


def fingertip_map(
    cfg: FingertipConfig,
    master_model: HandModel,
    q_master,
    slave_model: HandModel,
    q_init=None,
) -> tuple[np.ndarray, dict[str, float]]:
    """Match scaled master fingertip positions with per-finger slave IK.

    Returns the clamped slave pose and each slave finger's final Cartesian
    residual in meters (non-convergence shows up as a large residual, not an
    error).
    """
    if cfg.scale <= 0:
        raise ValueError(f"scale must be positive, got {cfg.scale}")
    q_master = as_pose(master_model, q_master)
    if q_init is None:
        q_init = 0.5 * (slave_model.joint_min + slave_model.joint_max)
    q_slave = as_pose(slave_model, q_init).copy()
    master_fk = {fk.name: fk.fingertip for fk in forward_kinematics(master_model, q_master)}

    # joints driven by exactly one finger; shared joints stay at q_init
    usage: dict[int, set[str]] = {}
    for f in slave_model.fingers:
        for link in f.links:
            usage.setdefault(link.joint_index, set()).add(f.name)

    residuals: dict[str, float] = {}
    for master_name, slave_name in cfg.finger_pairs:
        if master_name not in master_fk:
            raise ValueError(f"master hand has no finger named '{master_name}'")
        _, m_finger = _finger_by_name(master_model, master_name)
        _, s_finger = _finger_by_name(slave_model, slave_name)
        tip = master_fk[master_name]
        R_m = quat_to_matrix(m_finger.base_quat)
        local = R_m.T @ (tip - np.asarray(m_finger.base_pos, dtype=float))
        R_s = quat_to_matrix(s_finger.base_quat)
        target = R_s @ (cfg.scale * local) + np.asarray(s_finger.base_pos, dtype=float)
        own = sorted(
            {l.joint_index for l in s_finger.links if len(usage[l.joint_index]) == 1}
        )
        if not own:
            raise ValueError(f"slave finger '{slave_name}' has no exclusive joints")
        residuals[slave_name] = _solve_finger_ik(
            slave_model, s_finger, target, q_slave, own, cfg.ik
        )
    q_slave, _ = clamp_to_limits(slave_model, q_slave)
    return q_slave, residuals

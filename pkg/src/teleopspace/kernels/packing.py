"""Flatten a HandModel into contiguous arrays for the hot kernels.

Both kernel backends consume the same PackedHand. Packing also classifies
joints: a joint whose rotation axes all point (near-)along the palm approach
axis at the zero pose reorients fingers (spread/adduction) and is left alone
during grasp closing; every other referenced joint is a flexion joint that the
closing loop drives until contact or limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..hands import HandModel, quat_to_matrix

SPREAD_AXIS_DOT = 0.866  # |axis . palm z| above this marks a non-closing joint


@dataclass
class PackedHand:
    n_joints: int
    n_fingers: int
    n_links: int
    jmin: np.ndarray  # (N,)
    jmax: np.ndarray  # (N,)
    flexion: np.ndarray  # (N,) uint8
    base_R: np.ndarray  # (F, 9) row-major
    base_p: np.ndarray  # (F, 3)
    link_start: np.ndarray  # (F,) int32, first link of each finger
    link_count: np.ndarray  # (F,) int32
    link_joint: np.ndarray  # (L,) int32
    link_axis: np.ndarray  # (L, 3)
    link_len: np.ndarray  # (L,)
    link_is_distal: np.ndarray  # (L,) uint8
    close_step: float  # rad per closing step
    sweep_per_step: float  # meters, conservative bound on link motion per step
    max_steps: int


def pack_hand(model: HandModel) -> PackedHand:
    n_fingers = len(model.fingers)
    n_links = sum(len(f.links) for f in model.fingers)
    base_R = np.zeros((n_fingers, 9))
    base_p = np.zeros((n_fingers, 3))
    link_start = np.zeros(n_fingers, dtype=np.int32)
    link_count = np.zeros(n_fingers, dtype=np.int32)
    link_joint = np.zeros(n_links, dtype=np.int32)
    link_axis = np.zeros((n_links, 3))
    link_len = np.zeros(n_links)
    link_is_distal = np.zeros(n_links, dtype=np.uint8)

    axis_dot_z: dict[int, list[float]] = {}
    pos = 0
    for fi, finger in enumerate(model.fingers):
        R0 = quat_to_matrix(finger.base_quat)
        base_R[fi] = R0.reshape(-1)
        base_p[fi] = finger.base_pos
        link_start[fi] = pos
        link_count[fi] = len(finger.links)
        for li, link in enumerate(finger.links):
            link_joint[pos] = link.joint_index
            link_axis[pos] = link.axis
            link_len[pos] = link.length
            link_is_distal[pos] = 1 if li == len(finger.links) - 1 else 0
            # at the zero pose every preceding rotation is identity
            world_axis = R0 @ np.asarray(link.axis, dtype=float)
            axis_dot_z.setdefault(link.joint_index, []).append(abs(float(world_axis[2])))
            pos += 1

    flexion = np.zeros(model.dof, dtype=np.uint8)
    for j, dots in axis_dot_z.items():
        if max(dots) < SPREAD_AXIS_DOT:
            flexion[j] = 1

    # conservative per-step sweep: every flexion joint of a finger moving at
    # once, each carrying all material distal to it
    worst = 0.0
    for fi, finger in enumerate(model.fingers):
        lengths = [l.length for l in finger.links]
        total = 0.0
        seen = set()
        for li, link in enumerate(finger.links):
            j = link.joint_index
            if flexion[j] and j not in seen:
                seen.add(j)
                total += sum(lengths[li:])
        worst = max(worst, total)

    # keep any contact-band crossing shallower than the penetration limit
    step = min(0.01, 0.0018 / worst) if worst > 0 else 0.01
    ranges = [
        model.joints[j].max - model.joints[j].min for j in range(model.dof) if flexion[j]
    ]
    max_range = max(ranges) if ranges else 0.0
    return PackedHand(
        n_joints=model.dof,
        n_fingers=n_fingers,
        n_links=n_links,
        jmin=model.joint_min,
        jmax=model.joint_max,
        flexion=flexion,
        base_R=base_R,
        base_p=base_p,
        link_start=link_start,
        link_count=link_count,
        link_joint=link_joint,
        link_axis=np.ascontiguousarray(link_axis),
        link_len=link_len,
        link_is_distal=link_is_distal,
        close_step=step,
        sweep_per_step=step * worst,
        max_steps=int(math.ceil(max_range / step)) + 8,
    )

"""Shared test utilities: synthetic datasets, oracles, throwaway hands."""

from __future__ import annotations

import numpy as np

from teleopspace.hands import FingerChain, HandModel, JointSpec, LinkSpec
from teleopspace.objects import canonical_object_set
from teleopspace.sampling import Grasp, GraspDataset

# base quaternion turning the link axis (+x) up into the palm approach (+z),
# with curl toward +x or -x of the palm
QUAT_CURL_POS_X = (0.7071067811865476, 0.0, -0.7071067811865476, 0.0)
QUAT_CURL_NEG_X = (0.0, 0.7071067811865476, 0.0, 0.7071067811865476)


def two_finger_hand(
    hand_id="jaw",
    half_gap=0.045,
    l1=0.08,
    l2=0.06,
    scale=1.0,
    prox_limits=(-1.571, 1.571),
    dist_limits=(-0.3, 1.45),
):
    """Parallel-jaw test hand: two opposing 2-link fingers along +z."""
    joints = (
        JointSpec("f1_prox", *prox_limits),
        JointSpec("f1_dist", *dist_limits),
        JointSpec("f2_prox", *prox_limits),
        JointSpec("f2_dist", *dist_limits),
    )
    fingers = (
        FingerChain(
            "finger1", (-half_gap, 0.0, 0.0), QUAT_CURL_POS_X,
            (LinkSpec(l1, 0, (0.0, -1.0, 0.0)), LinkSpec(l2, 1, (0.0, 1.0, 0.0))),
        ),
        FingerChain(
            "finger2", (half_gap, 0.0, 0.0), QUAT_CURL_NEG_X,
            (LinkSpec(l1, 2, (0.0, -1.0, 0.0)), LinkSpec(l2, 3, (0.0, 1.0, 0.0))),
        ),
    )
    return HandModel(hand_id, 4, scale, joints, fingers)


def scaled_replica(model: HandModel, s: float, hand_id: str) -> HandModel:
    """Same joints, every length and base offset multiplied by s."""
    fingers = tuple(
        FingerChain(
            f.name,
            tuple(v * s for v in f.base_pos),
            f.base_quat,
            tuple(LinkSpec(l.length * s, l.joint_index, l.axis) for l in f.links),
        )
        for f in model.fingers
    )
    return HandModel(hand_id, model.dof, model.scale, model.joints, fingers)


def planted_dataset(
    N=7,
    seed=5,
    per_object=12,
    outlier_frac=0.2,
    noise=0.0,
    xi=0.1,
):
    """Grasps exactly on a random affine 3-plane at the canonical psi targets.

    Returns (dataset, planted_basis_columns (N,3), planted_origin,
    planted_row_mask) where noise, if any, stays inside the plane.
    """
    rng = np.random.default_rng(seed)
    A = np.linalg.qr(rng.normal(size=(N, 3)))[0]
    o = rng.uniform(-0.5, 0.5, N)
    grasps = {}
    planted_mask = []
    for spec in canonical_object_set(1.0):
        lst = []
        psi = np.array(spec.predicted_psi)
        for i in range(per_object):
            inplane = rng.uniform(-noise, noise, 3) if noise > 0 else np.zeros(3)
            q = o + A @ (psi + inplane)
            lst.append(Grasp(spec.id, q, 1.0 - 0.01 * i, spec.grasp_type, np.zeros(3)))
            planted_mask.append(True)
        for _ in range(int(round(outlier_frac * per_object))):
            q = o + rng.uniform(-2.0, 2.0, N)
            lst.append(Grasp(spec.id, q, 0.05, spec.grasp_type, np.zeros(3)))
            planted_mask.append(False)
        grasps[spec.id] = lst
    ds = GraspDataset("synthetic", N, grasps, xi_final=xi, provenance={"planted": True})
    return ds, A, o, np.array(planted_mask)


def principal_angles(basis_rows: np.ndarray, planted_cols: np.ndarray) -> np.ndarray:
    """Angles between the span of basis rows and the span of planted columns."""
    Q1 = np.linalg.qr(np.asarray(basis_rows).T)[0]
    Q2 = np.linalg.qr(np.asarray(planted_cols))[0]
    s = np.linalg.svd(Q1.T @ Q2, compute_uv=False)
    return np.arccos(np.clip(s, -1.0, 1.0))


def random_mapping(rng, N, hand_id="rand", zero_axis=None):
    """TeleopMapping with random orthonormal columns and positive scaling."""
    from teleopspace.subspace import TeleopMapping

    A = np.linalg.qr(rng.normal(size=(N, 3)))[0]
    delta = rng.uniform(0.2, 3.0, 3)
    if zero_axis is not None:
        A[:, zero_axis] = 0.0
        delta[zero_axis] = 0.0
        # re-orthonormalize the surviving columns
        keep = [k for k in range(3) if k != zero_axis]
        Q = np.linalg.qr(A[:, keep])[0]
        A[:, keep] = Q
    delta_star = np.where(delta > 0, 1.0 / delta, 0.0)
    origin = rng.normal(size=N)
    return TeleopMapping(hand_id, N, origin, A, delta, delta_star, {"method": "empirical"})

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import two_finger_hand
from teleopspace.hands import (
    FingerChain,
    HandModel,
    JointSpec,
    LinkSpec,
    clamp_to_limits,
    fk_segments,
    forward_kinematics,
    validate_model,
)

IDENTITY_QUAT = (1.0, 0.0, 0.0, 0.0)


def straight_hand(lengths, axes=None, limits=(-3.14, 3.14)):
    n = len(lengths)
    axes = axes or [(0.0, 0.0, 1.0)] * n
    joints = tuple(JointSpec(f"j{i}", *limits) for i in range(n))
    links = tuple(LinkSpec(lengths[i], i, axes[i]) for i in range(n))
    finger = FingerChain("f", (0.0, 0.0, 0.0), IDENTITY_QUAT, links)
    return HandModel("test", n, 1.0, joints, (finger,))


def test_validate_well_formed(schunk):
    assert validate_model(schunk) == []


def test_validate_min_above_max():
    m = straight_hand([0.04])
    bad = HandModel(m.hand_id, m.dof, m.scale, (JointSpec("j0", 1.0, -1.0),), m.fingers)
    violations = validate_model(bad)
    assert len(violations) == 1 and "j0" in violations[0]


def test_validate_link_index_out_of_range():
    joints = (JointSpec("j0", -1, 1),)
    finger = FingerChain(
        "f", (0, 0, 0), IDENTITY_QUAT, (LinkSpec(0.04, 1, (0.0, 0.0, 1.0)),)
    )
    violations = validate_model(HandModel("bad", 1, 1.0, joints, (finger,)))
    assert any("out of range" in v for v in violations)
    assert any("not referenced" in v for v in violations)


def test_fk_zero_angles_straight_chain():
    m = straight_hand([0.04, 0.03])
    fk = forward_kinematics(m, [0.0, 0.0])
    np.testing.assert_allclose(fk[0].fingertip, [0.07, 0.0, 0.0], atol=1e-15)


def test_fk_quarter_turn():
    m = straight_hand([0.05])
    fk = forward_kinematics(m, [math.pi / 2])
    np.testing.assert_allclose(fk[0].fingertip, [0.0, 0.05, 0.0], atol=1e-12)


def _oracle_fk(base_pos, base_quat, links, q):
    """Independent composition via explicit homogeneous matrices."""
    from scipy.spatial.transform import Rotation

    T = np.eye(4)
    T[:3, :3] = Rotation.from_quat(
        [base_quat[1], base_quat[2], base_quat[3], base_quat[0]]
    ).as_matrix()
    T[:3, 3] = base_pos
    tips = []
    for link in links:
        R = np.eye(4)
        R[:3, :3] = Rotation.from_rotvec(np.asarray(link.axis) * q[link.joint_index]).as_matrix()
        D = np.eye(4)
        D[0, 3] = link.length
        T = T @ R @ D
        tips.append(T[:3, 3].copy())
    return tips


def test_fk_matches_matrix_product_oracle():
    rng = np.random.default_rng(42)
    for _ in range(25):
        axes = rng.normal(size=(3, 3))
        axes /= np.linalg.norm(axes, axis=1, keepdims=True)
        m = straight_hand([0.05, 0.04, 0.03], axes=[tuple(a) for a in axes])
        q = rng.uniform(-3, 3, 3)
        fk = forward_kinematics(m, q)
        oracle = _oracle_fk((0, 0, 0), IDENTITY_QUAT, m.fingers[0].links, q)
        for T, tip in zip(fk[0].transforms, oracle):
            np.testing.assert_allclose(T[:3, 3], tip, atol=1e-12)


def test_fk_deterministic_bitwise(schunk):
    q = np.linspace(-0.3, 0.9, schunk.dof)
    a = forward_kinematics(schunk, q)
    b = forward_kinematics(schunk, q)
    for fa, fb in zip(a, b):
        assert np.array_equal(fa.fingertip, fb.fingertip)
        for ta, tb in zip(fa.transforms, fb.transforms):
            assert np.array_equal(ta, tb)


@given(st.floats(0.1, 5.0))
@settings(max_examples=20, deadline=None)
def test_fk_link_length_scaling(s):
    rng = np.random.default_rng(7)
    q = rng.uniform(-2, 2, 3)
    m1 = straight_hand([0.05, 0.04, 0.03])
    m2 = straight_hand([0.05 * s, 0.04 * s, 0.03 * s])
    t1 = forward_kinematics(m1, q)[0].fingertip
    t2 = forward_kinematics(m2, q)[0].fingertip
    np.testing.assert_allclose(t2, t1 * s, atol=1e-12 * max(1.0, s))


def test_fk_segments_counts(schunk):
    segs = fk_segments(schunk, np.zeros(schunk.dof))
    assert [len(f) for f in segs] == [len(f.links) for f in schunk.fingers]
    fk = forward_kinematics(schunk, np.zeros(schunk.dof))
    for finger_segs, finger_fk in zip(segs, fk):
        np.testing.assert_allclose(finger_segs[-1][1], finger_fk.fingertip, atol=1e-15)


def test_clamp_inside_unchanged(gripper):
    q = np.zeros(gripper.dof)
    out, flags = clamp_to_limits(gripper, q)
    assert np.array_equal(out, q)
    assert not flags.any()


def test_clamp_below_min(gripper):
    q = gripper.joint_min - 1.0
    out, flags = clamp_to_limits(gripper, q)
    np.testing.assert_array_equal(out, gripper.joint_min)
    assert flags.all()


def test_clamp_nan_rejected(gripper):
    q = np.zeros(gripper.dof)
    q[1] = math.nan
    with pytest.raises(ValueError, match="NaN"):
        clamp_to_limits(gripper, q)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=30, deadline=None)
def test_clamp_idempotent(seed):
    m = two_finger_hand()
    rng = np.random.default_rng(seed)
    q = rng.uniform(-5, 5, m.dof)
    once, _ = clamp_to_limits(m, q)
    twice, flags = clamp_to_limits(m, once)
    assert np.array_equal(once, twice)
    assert not flags.any()


def test_dimension_mismatch_rejected(gripper):
    with pytest.raises(ValueError, match="shape"):
        forward_kinematics(gripper, np.zeros(gripper.dof + 1))

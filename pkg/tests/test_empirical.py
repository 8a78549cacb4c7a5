import numpy as np
import pytest

from teleopspace import storage
from teleopspace.empirical import (
    ExtremaPoses,
    MotionAssignment,
    build_empirical_mapping,
    build_projection_matrix,
)
from teleopspace.subspace import project_to_subspace

SCHUNK_ASSIGN = MotionAssignment(
    spread={0: 1}, size={1: 1, 3: 1, 5: 1}, curl={2: 1, 4: 1, 6: 1}
)

TABLE_ALPHA = [1, 0, 0, 0, 0, 0, 0]
TABLE_SIGMA = [0, 0.577, 0, 0.577, 0, 0.577, 0]
TABLE_EPSILON = [0, 0, 0.577, 0, 0.577, 0, 0.577]


def test_schunk_columns_match_published_values():
    A = build_projection_matrix(7, SCHUNK_ASSIGN)
    np.testing.assert_allclose(A[:, 0], TABLE_ALPHA, atol=1e-3)
    np.testing.assert_allclose(A[:, 1], TABLE_SIGMA, atol=1e-3)
    np.testing.assert_allclose(A[:, 2], TABLE_EPSILON, atol=1e-3)


def test_single_joint_columns_are_signed_units():
    A = build_projection_matrix(3, MotionAssignment(spread={0: 1}, size={1: -1}, curl={2: 1}))
    np.testing.assert_array_equal(A[:, 0], [1, 0, 0])
    np.testing.assert_array_equal(A[:, 1], [0, -1, 0])
    np.testing.assert_array_equal(A[:, 2], [0, 0, 1])


def test_gripper_columns():
    A = build_projection_matrix(4, MotionAssignment(spread={}, size={0: 1, 2: 1}, curl={1: 1, 3: 1}))
    np.testing.assert_allclose(A[:, 0], np.zeros(4), atol=0)
    np.testing.assert_allclose(A[:, 1], [0.707, 0, 0.707, 0], atol=1e-3)
    np.testing.assert_allclose(A[:, 2], [0, 0.707, 0, 0.707], atol=1e-3)
    # normalization oracle: every nonzero column has unit norm
    for k in (1, 2):
        assert abs(np.linalg.norm(A[:, k]) - 1.0) < 1e-12


def test_columns_orthogonal_by_construction():
    A = build_projection_matrix(7, SCHUNK_ASSIGN)
    for a in range(3):
        for b in range(a + 1, 3):
            assert float(A[:, a] @ A[:, b]) == 0.0


def test_overlapping_sets_rejected():
    with pytest.raises(ValueError, match="single motion"):
        build_projection_matrix(4, MotionAssignment(spread={0: 1}, size={0: 1}, curl={}))


def test_out_of_range_index_rejected():
    with pytest.raises(ValueError, match="out of range"):
        build_projection_matrix(4, MotionAssignment(spread={4: 1}, size={}, curl={}))


def test_bad_sign_rejected():
    with pytest.raises(ValueError, match="sign"):
        build_projection_matrix(4, MotionAssignment(spread={0: 2}, size={}, curl={}))


def test_joint_listing_order_irrelevant():
    a = MotionAssignment(spread={0: 1}, size={1: 1, 3: 1, 5: 1}, curl={2: 1, 4: 1, 6: 1})
    b = MotionAssignment(spread={0: 1}, size={5: 1, 1: 1, 3: 1}, curl={6: 1, 2: 1, 4: 1})
    np.testing.assert_array_equal(build_projection_matrix(7, a), build_projection_matrix(7, b))


def test_empirical_mapping_reproduces_table(schunk, data_dir):
    _, assign = storage.load_assignment(data_dir / "schunk-motions.json")
    extrema = storage.load_extrema(data_dir / "schunk-extrema.json")
    origin = 0.5 * (schunk.joint_min + schunk.joint_max)
    mapping = build_empirical_mapping(schunk, origin, assign, extrema)
    np.testing.assert_allclose(mapping.A[:, 1], TABLE_SIGMA, atol=1e-3)
    # every extrema pose axis re-projects to a unit range
    pooled = np.array(extrema.pooled())
    projected = (pooled - origin) @ mapping.A * mapping.delta
    for k in range(3):
        spread = projected[:, k].max() - projected[:, k].min()
        assert abs(spread - 1.0) < 1e-9
    assert mapping.provenance["method"] == "empirical"


def test_gripper_empty_spread_gives_zero_scale(gripper, data_dir):
    _, assign = storage.load_assignment(data_dir / "gripper2f-motions.json")
    extrema = storage.load_extrema(data_dir / "gripper2f-extrema.json")
    origin = 0.5 * (gripper.joint_min + gripper.joint_max)
    mapping = build_empirical_mapping(gripper, origin, assign, extrema)
    assert mapping.delta[0] == 0.0 and mapping.delta_star[0] == 0.0


def test_degenerate_size_extrema_warns(gripper, data_dir):
    _, assign = storage.load_assignment(data_dir / "gripper2f-motions.json")
    origin = 0.5 * (gripper.joint_min + gripper.joint_max)
    extrema = storage.load_extrema(data_dir / "gripper2f-extrema.json")
    degenerate = ExtremaPoses(spread=(), size=(origin.copy(), origin.copy()), curl=extrema.curl)
    mapping = build_empirical_mapping(gripper, origin, assign, degenerate)
    assert mapping.delta[1] == 0.0 and mapping.delta_star[1] == 0.0
    assert any("size" in n for n in mapping.provenance["notes"])


def test_missing_extrema_for_nonzero_axis_rejected(gripper, data_dir):
    _, assign = storage.load_assignment(data_dir / "gripper2f-motions.json")
    origin = 0.5 * (gripper.joint_min + gripper.joint_max)
    with pytest.raises(ValueError, match="extrema"):
        build_empirical_mapping(gripper, origin, assign, ExtremaPoses())


def test_origin_outside_limits_rejected(gripper, data_dir):
    _, assign = storage.load_assignment(data_dir / "gripper2f-motions.json")
    extrema = storage.load_extrema(data_dir / "gripper2f-extrema.json")
    origin = gripper.joint_max + 1.0
    with pytest.raises(ValueError, match="limits"):
        build_empirical_mapping(gripper, origin, assign, extrema)

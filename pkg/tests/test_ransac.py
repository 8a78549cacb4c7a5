import numpy as np
import pytest

from helpers import planted_dataset, principal_angles
from teleopspace.fitting import (
    DegenerateBasisError,
    FitConfig,
    SubspaceHypothesis,
    TieredScore,
    better_score,
    build_algorithmic_mapping,
    extrema_from_limits,
    fit_subspace,
    gram_schmidt,
    inliers_per_object,
    point_to_subspace_distance,
    relocate_origin,
    sample_hypothesis,
    score_hypothesis,
    score_key,
)
from teleopspace.sampling import Grasp, GraspDataset


def test_gram_schmidt_fixes_orthonormal_input():
    rng = np.random.default_rng(0)
    Q = np.linalg.qr(rng.normal(size=(6, 3)))[0].T
    out = gram_schmidt(Q)
    np.testing.assert_allclose(out, Q, atol=1e-12)


def test_gram_schmidt_hand_example():
    s = 1 / np.sqrt(2)
    v1 = np.array([s, s, 0.0, 0.0])
    v2 = np.array([1.0, 0.0, 0.0, 0.0])
    v3 = np.array([0.0, 0.0, 1.0, 0.0])
    out = gram_schmidt([v1, v2, v3])
    np.testing.assert_allclose(out[0], v1, atol=1e-12)
    np.testing.assert_allclose(out[1], [s, -s, 0.0, 0.0], atol=1e-12)
    np.testing.assert_allclose(out[2], v3, atol=1e-12)


def test_gram_schmidt_dependent_rejected():
    v = np.array([1.0, 2.0, 0.0])
    with pytest.raises(DegenerateBasisError):
        gram_schmidt([v, 2 * v, np.array([0.0, 0.0, 1.0])])


def test_gram_schmidt_against_qr_oracle():
    rng = np.random.default_rng(1)
    for _ in range(50):
        V = rng.normal(size=(3, 8))
        out = gram_schmidt(V)
        # orthonormal within 1e-10 and same span as a QR factorization
        np.testing.assert_allclose(out @ out.T, np.eye(3), atol=1e-10)
        assert principal_angles(out, V.T).max() < 1e-9


def _hyp(origin, basis):
    return SubspaceHypothesis(origin=np.asarray(origin, float), basis=np.asarray(basis, float))


def test_distance_in_span_is_zero():
    rng = np.random.default_rng(2)
    basis = np.linalg.qr(rng.normal(size=(7, 3)))[0].T
    o = rng.normal(size=7)
    h = _hyp(o, basis)
    g = o + basis.T @ np.array([0.3, -1.2, 0.7])
    assert point_to_subspace_distance(h, g) < 1e-12


def test_distance_orthogonal_offset():
    rng = np.random.default_rng(3)
    basis = np.linalg.qr(rng.normal(size=(6, 3)))[0].T
    o = rng.normal(size=6)
    n = rng.normal(size=6)
    for b in basis:
        n -= (n @ b) * b
    n *= 0.3 / np.linalg.norm(n)
    d = point_to_subspace_distance(_hyp(o, basis), o + n)
    assert abs(d - 0.3) < 1e-12


def test_distance_matches_normal_equations_oracle():
    rng = np.random.default_rng(4)
    for _ in range(30):
        basis = np.linalg.qr(rng.normal(size=(6, 3)))[0].T
        o = rng.normal(size=6)
        g = rng.normal(size=6)
        d = point_to_subspace_distance(_hyp(o, basis), g)
        coeffs, res, *_ = np.linalg.lstsq(basis.T, g - o, rcond=None)
        oracle = np.linalg.norm((g - o) - basis.T @ coeffs)
        assert abs(d - oracle) < 1e-10


# --- tiered score ordering ---------------------------------------------------


def _brute_better(a, b):
    if a.t1 != b.t1:
        return a.t1 > b.t1
    if a.t2 != b.t2:
        return a.t2 < b.t2
    if a.t3 != b.t3:
        return a.t3 > b.t3
    return a.t4 < b.t4


def _random_score(rng):
    return TieredScore(
        t1=int(rng.integers(0, 4)),
        t2=int(rng.integers(1, 9)),
        t3=int(rng.integers(0, 30)),
        t4=float(rng.integers(0, 5)),  # small ints force ties
    )


def test_score_examples():
    all_one = TieredScore(1, 8, 8, 10.0)
    one_zero = TieredScore(0, 1, 35, 10.0)
    assert better_score(all_one, one_zero)  # t1 dominates total inliers
    few_at_min = TieredScore(1, 1, 15, 10.0)
    all_at_min = TieredScore(1, 8, 15, 10.0)
    assert better_score(few_at_min, all_at_min)
    lower_err = TieredScore(1, 1, 15, 5.0)
    assert better_score(lower_err, few_at_min)


def test_comparator_matches_brute_oracle():
    rng = np.random.default_rng(5)
    for _ in range(10_000):
        a, b = _random_score(rng), _random_score(rng)
        assert better_score(a, b) == _brute_better(a, b)


def test_comparator_strict_weak_ordering():
    rng = np.random.default_rng(6)
    scores = [_random_score(rng) for _ in range(60)]
    for a in scores:
        assert not better_score(a, a)
    for a in scores:
        for b in scores:
            if better_score(a, b):
                assert not better_score(b, a)
    for a in scores[:25]:
        for b in scores[:25]:
            for c in scores[:25]:
                if better_score(a, b) and better_score(b, c):
                    assert better_score(a, c)
                # incomparability (equality of keys) is transitive
                if score_key(a) == score_key(b) and score_key(b) == score_key(c):
                    assert score_key(a) == score_key(c)


# --- hypothesis sampling and fitting ----------------------------------------


def test_sample_hypothesis_labels_from_unit_offsets():
    o = np.zeros(5)
    e = np.eye(5)
    grasps = {
        8: [Grasp(8, o, 1.0, "power", np.zeros(3))],
        7: [Grasp(7, o + e[0], 1.0, "power", np.zeros(3))],
        4: [Grasp(4, o + e[1], 1.0, "precision", np.zeros(3))],
        6: [Grasp(6, o + e[2], 1.0, "power", np.zeros(3))],
        1: [Grasp(1, o + e[3], 1.0, "precision", np.zeros(3))],
    }
    ds = GraspDataset("t", 5, grasps, xi_final=0.1)
    hyp = sample_hypothesis(ds, np.random.default_rng(0))
    np.testing.assert_allclose(hyp.basis[0], e[2], atol=1e-12)  # spread from object 6
    np.testing.assert_allclose(hyp.basis[1], e[0], atol=1e-12)  # size from object 7
    np.testing.assert_allclose(hyp.basis[2], e[1], atol=1e-12)  # curl from object 4


def test_sample_hypothesis_deterministic():
    ds, *_ = planted_dataset(seed=9)
    h1 = sample_hypothesis(ds, np.random.default_rng(42))
    h2 = sample_hypothesis(ds, np.random.default_rng(42))
    assert np.array_equal(h1.basis, h2.basis)
    assert h1.origin_index == h2.origin_index


def test_sample_hypothesis_rejects_degenerate_sets():
    o = np.zeros(4)
    same = [Grasp(i, o, 1.0, "power", np.zeros(3)) for i in (8, 7, 4, 6)]
    ds = GraspDataset("t", 4, {g.object_id: [g] for g in same}, xi_final=0.1)
    with pytest.raises(DegenerateBasisError):
        sample_hypothesis(ds, np.random.default_rng(0))


def test_fit_requires_source_objects():
    ds, *_ = planted_dataset(seed=9)
    del ds.grasps[7]
    with pytest.raises(ValueError, match="object 7"):
        fit_subspace(ds, FitConfig(M=10, seed=0))


def test_fit_recovers_planted_subspace():
    ds, A, o, _ = planted_dataset(seed=21)
    hyp, score, info = fit_subspace(ds, FitConfig(M=2000, seed=3))
    assert principal_angles(hyp.basis, A).max() < 1e-6
    assert score.t1 >= 1
    assert len(info["per_object_inliers"]) == 8


def test_fit_deterministic_and_worker_invariant():
    ds, *_ = planted_dataset(seed=22)
    a = fit_subspace(ds, FitConfig(M=1500, seed=5))
    b = fit_subspace(ds, FitConfig(M=1500, seed=5))
    c = fit_subspace(ds, FitConfig(M=1500, seed=5, workers=2))
    for other in (b, c):
        assert np.array_equal(a[0].basis, other[0].basis)
        assert np.array_equal(a[0].origin, other[0].origin)
        assert a[1] == other[1]
        assert a[2]["best_index"] == other[2]["best_index"]


def test_inliers_per_object_matches_manual_count():
    ds, A, o, _ = planted_dataset(seed=23)
    hyp, score, info = fit_subspace(ds, FitConfig(M=500, seed=1))
    per = inliers_per_object(hyp, ds, 0.1)
    assert per.tolist() == info["per_object_inliers"]
    manual = []
    for oid in ds.object_ids():
        manual.append(
            sum(1 for g in ds.grasps[oid] if point_to_subspace_distance(hyp, g.q) < 0.1)
        )
    assert per.tolist() == manual
    assert score_key(score_hypothesis(hyp, ds, 0.1)) == score_key(score)


# --- origin relocation -------------------------------------------------------


def test_relocate_singleton():
    ds, A, o, _ = planted_dataset(seed=24)
    hyp, *_ = fit_subspace(ds, FitConfig(M=300, seed=2))
    ds.grasps[1] = ds.grasps[1][:1]
    out = relocate_origin(hyp, ds)
    np.testing.assert_array_equal(out.origin, ds.grasps[1][0].q)
    assert principal_angles(out.basis, hyp.basis.T).max() < 1e-12


def test_relocate_prefers_closer_grasp():
    basis = np.eye(3)[:3]
    basis = np.vstack([np.eye(6)[0], np.eye(6)[1], np.eye(6)[2]])
    hyp = _hyp(np.zeros(6), basis)
    near = np.zeros(6)
    near[4] = 0.02
    far = np.zeros(6)
    far[4] = 0.5
    ds = GraspDataset(
        "t", 6,
        {1: [Grasp(1, far, 1.0, "power", np.zeros(3)), Grasp(1, near, 0.5, "power", np.zeros(3))]},
    )
    out = relocate_origin(hyp, ds)
    np.testing.assert_array_equal(out.origin, near)


def test_relocate_human_calibration_passthrough():
    hyp = _hyp(np.zeros(4), np.eye(4)[:3])
    pose = np.array([0.1, 0.2, 0.3, 0.4])
    out = relocate_origin(hyp, calibration_pose=pose)
    np.testing.assert_array_equal(out.origin, pose)
    np.testing.assert_array_equal(out.basis, hyp.basis)


def test_relocate_requires_input():
    hyp = _hyp(np.zeros(4), np.eye(4)[:3])
    with pytest.raises(ValueError):
        relocate_origin(hyp)


# --- scaling from joint extrema ----------------------------------------------


def _limit_model(lo, hi):
    from helpers import two_finger_hand

    m = two_finger_hand()
    return m


def test_extrema_pose_counts(gripper):
    basis = np.zeros((3, 4))
    basis[0, 0] = 1.0  # one relevant joint -> 2 poses
    basis[1, 1] = 0.8
    basis[1, 2] = 0.6  # two relevant -> 4 poses
    basis[2, 3] = 1.0
    hyp = _hyp(np.zeros(4), basis)
    poses, notes = extrema_from_limits(gripper, hyp, FitConfig())
    assert len(poses) == 2 + 4 + 2
    assert notes == []


def test_extrema_cap_sampling():
    from helpers import planted_dataset

    ds, A, o, _ = planted_dataset(N=16, seed=25)
    hyp, *_ = fit_subspace(ds, FitConfig(M=200, seed=0))
    from teleopspace.hands import FingerChain, HandModel, JointSpec, LinkSpec

    joints = tuple(JointSpec(f"j{i}", -1.0, 1.0) for i in range(16))
    links = tuple(LinkSpec(0.01, i, (0.0, 0.0, 1.0)) for i in range(16))
    model = HandModel(
        "wide", 16, 1.0, joints,
        (FingerChain("f", (0, 0, 0), (1.0, 0.0, 0.0, 0.0), links),),
    )
    cfg = FitConfig(M=200, seed=0, delta_combo_cap=256)
    hyp2 = SubspaceHypothesis(origin=np.zeros(16), basis=hyp.basis)
    poses, notes = extrema_from_limits(model, hyp2, cfg)
    assert len(poses) == 3 * 256
    assert len(notes) == 3 and all("sampled" in n for n in notes)


def test_build_algorithmic_mapping_scaling(gripper):
    basis = np.zeros((3, 4))
    basis[1, 0] = 1.0
    basis[2, 1] = 1.0
    basis[0] = 0.0  # spread axis absent: delta must vanish there
    hyp = _hyp(0.5 * (gripper.joint_min + gripper.joint_max), basis)
    mapping = build_algorithmic_mapping(gripper, hyp, FitConfig(seed=0))
    assert mapping.delta[0] == 0.0 and mapping.delta_star[0] == 0.0
    assert mapping.delta[1] > 0 and mapping.delta[2] > 0
    assert mapping.provenance["method"] == "ransac"
    assert mapping.provenance["delta_source"] == "joint-extrema"
    # re-projections of the enumerated extrema span a unit range
    poses, _ = extrema_from_limits(gripper, hyp, FitConfig(seed=0))
    projected = (np.array(poses) - hyp.origin) @ mapping.A * mapping.delta
    for k in (1, 2):
        assert abs(projected[:, k].max() - projected[:, k].min() - 1.0) < 1e-9

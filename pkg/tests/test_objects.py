import math

import numpy as np
import pytest

from teleopspace.objects import (
    BOX,
    DISK,
    box_surface,
    canonical_object_set,
    disk_surface,
    grasp_width_m,
    object_params,
)


def test_canonical_set_unit_scale():
    objs = canonical_object_set(1.0)
    assert len(objs) == 8
    o2 = objs[1]
    assert o2.primitive == "disk" and o2.dims == (110, 110, 10)
    assert o2.grasp_type == "precision" and o2.predicted_psi == (1.0, 1.0, 0.0)
    o7 = objs[6]
    assert o7.primitive == "box" and o7.grasp_type == "power"
    assert o7.predicted_psi == (0.0, 0.0, 1.0)


def test_scaled_set():
    o3 = canonical_object_set(1.5)[2]
    assert o3.dims == (67.5, 450.0, 15.0)
    assert o3.predicted_psi == (0.0, 0.0, 0.0)


def test_same_dims_different_grasp_type():
    objs = canonical_object_set(1.0)
    o1, o6 = objs[0], objs[5]
    assert o1.dims == o6.dims
    assert o1.grasp_type != o6.grasp_type
    assert o1.predicted_psi[2] == 0.0 and o6.predicted_psi[2] == 1.0


def test_nonpositive_scale_rejected():
    with pytest.raises(ValueError):
        canonical_object_set(0.0)


def test_object_params_and_width():
    objs = canonical_object_set(1.0)
    kind, r, hz, _ = object_params(objs[0])
    assert kind == DISK and r == pytest.approx(0.035) and hz == pytest.approx(0.005)
    kind, hx, hy, hz = object_params(objs[2])
    assert kind == BOX
    assert (hx, hy, hz) == (pytest.approx(0.0225), pytest.approx(0.15), pytest.approx(0.005))
    assert grasp_width_m(objs[0]) == pytest.approx(0.070)
    assert grasp_width_m(objs[4]) == pytest.approx(0.100)


def test_box_surface_outside_face():
    d, c, n = box_surface([0.2, 0.0, 0.0], [0.1, 0.1, 0.1])
    assert d == pytest.approx(0.1)
    np.testing.assert_allclose(c, [0.1, 0.0, 0.0])
    np.testing.assert_allclose(n, [1.0, 0.0, 0.0])


def test_box_surface_outside_corner():
    d, c, n = box_surface([0.2, 0.2, 0.2], [0.1, 0.1, 0.1])
    assert d == pytest.approx(math.sqrt(3) * 0.1)
    np.testing.assert_allclose(c, [0.1, 0.1, 0.1])
    assert abs(np.linalg.norm(n) - 1.0) < 1e-12


def test_box_surface_inside():
    d, c, n = box_surface([0.05, 0.0, 0.0], [0.1, 0.1, 0.1])
    assert d == pytest.approx(-0.05)
    np.testing.assert_allclose(c, [0.1, 0.0, 0.0])
    np.testing.assert_allclose(n, [1.0, 0.0, 0.0])


def test_disk_surface_lateral():
    d, c, n = disk_surface([0.2, 0.0, 0.0], 0.1, 0.01)
    assert d == pytest.approx(0.1)
    np.testing.assert_allclose(c, [0.1, 0.0, 0.0])
    np.testing.assert_allclose(n, [1.0, 0.0, 0.0])


def test_disk_surface_above_cap():
    d, c, n = disk_surface([0.0, 0.0, 0.05], 0.1, 0.01)
    assert d == pytest.approx(0.04)
    np.testing.assert_allclose(c, [0.0, 0.0, 0.01])
    np.testing.assert_allclose(n, [0.0, 0.0, 1.0])


def test_disk_surface_rim_corner():
    d, c, n = disk_surface([0.2, 0.0, 0.05], 0.1, 0.01)
    assert d == pytest.approx(math.hypot(0.1, 0.04))
    np.testing.assert_allclose(c, [0.1, 0.0, 0.01])
    assert abs(np.linalg.norm(n) - 1.0) < 1e-12


def test_disk_surface_inside_prefers_nearest_feature():
    d, c, n = disk_surface([0.0, 0.0, 0.005], 0.1, 0.01)
    assert d == pytest.approx(-0.005)
    np.testing.assert_allclose(n, [0.0, 0.0, 1.0])
    d, c, n = disk_surface([0.098, 0.0, 0.0], 0.1, 0.01)
    assert d == pytest.approx(-0.002)
    np.testing.assert_allclose(n, [1.0, 0.0, 0.0])


def test_surfaces_report_points_on_surface():
    rng = np.random.default_rng(3)
    for _ in range(200):
        p = rng.uniform(-0.3, 0.3, 3)
        d, c, n = box_surface(p, [0.1, 0.15, 0.01])
        qx = abs(c[0]) - 0.1
        qy = abs(c[1]) - 0.15
        qz = abs(c[2]) - 0.01
        assert max(qx, qy, qz) == pytest.approx(0.0, abs=1e-12)
        assert abs(np.linalg.norm(n) - 1.0) < 1e-9
        d, c, n = disk_surface(p, 0.08, 0.005)
        on_lateral = abs(math.hypot(c[0], c[1]) - 0.08) < 1e-12 and abs(c[2]) <= 0.005 + 1e-12
        on_cap = abs(abs(c[2]) - 0.005) < 1e-12 and math.hypot(c[0], c[1]) <= 0.08 + 1e-12
        assert on_lateral or on_cap
        assert abs(np.linalg.norm(n) - 1.0) < 1e-9

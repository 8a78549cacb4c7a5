"""The shared 3-D teleoperation subspace and its projection math.

Axis order everywhere is (spread, size, curl). A mapping for one hand bundles
an origin pose o, an N-by-3 projection matrix A with columns in that axis
order, and per-axis scaling factors delta (into the subspace) and delta_star
(back out). Projections:

    psi = ((q - o) . A) * delta            (elementwise *)
    q   = ((psi * delta_star) . A^T) + o

Columns of A must be orthogonal and either unit norm or all-zero; a zero
column (a hand without that motion) forces delta = delta_star = 0 on its axis.
Projection back out is never clamped to joint limits here; clamping is the
streaming layer's job.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

AXES = ("spread", "size", "curl")
ORTHO_TOL = 1e-9


@dataclass(frozen=True)
class TeleopMapping:
    """Everything needed to project one hand in and out of the subspace."""

    hand_id: str
    dof: int
    origin: np.ndarray  # (N,)
    A: np.ndarray  # (N, 3), columns ordered (spread, size, curl)
    delta: np.ndarray  # (3,)
    delta_star: np.ndarray  # (3,)
    provenance: dict = field(default_factory=dict)


def validate_mapping(m: TeleopMapping) -> list[str]:
    bad = []
    if m.origin.shape != (m.dof,):
        bad.append(f"origin: shape {m.origin.shape} != ({m.dof},)")
    if m.A.shape != (m.dof, 3):
        bad.append(f"A: shape {m.A.shape} != ({m.dof}, 3)")
    else:
        for k in range(3):
            n = np.linalg.norm(m.A[:, k])
            if n > ORTHO_TOL and abs(n - 1.0) > ORTHO_TOL:
                bad.append(f"A column {AXES[k]}: norm {n:.12f} is neither 0 nor 1")
        for a in range(3):
            for b in range(a + 1, 3):
                d = abs(float(m.A[:, a] @ m.A[:, b]))
                if d > ORTHO_TOL:
                    bad.append(f"A columns {AXES[a]},{AXES[b]}: dot {d:.3e} not orthogonal")
    for k in range(3):
        dz = m.delta[k] == 0.0
        sz = m.delta_star[k] == 0.0
        if dz != sz:
            bad.append(f"scaling axis {AXES[k]}: delta and delta_star must vanish together")
        if not dz and abs(m.delta[k] * m.delta_star[k] - 1.0) > 1e-12:
            bad.append(f"scaling axis {AXES[k]}: delta * delta_star != 1")
        if m.delta[k] < 0 or m.delta_star[k] < 0:
            bad.append(f"scaling axis {AXES[k]}: must be >= 0")
    return bad


def _check_pose(m: TeleopMapping, q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    if q.shape != (m.dof,):
        raise ValueError(f"pose has shape {q.shape}, expected ({m.dof},)")
    if not np.isfinite(q).all():
        raise ValueError("pose has non-finite components")
    return q


def project_to_subspace(m: TeleopMapping, q) -> np.ndarray:
    """Map a joint pose to its subspace point: psi = ((q - o) . A) * delta."""
    q = _check_pose(m, q)
    return ((q - m.origin) @ m.A) * m.delta


def project_from_subspace(m: TeleopMapping, psi) -> np.ndarray:
    """Map a subspace point to a joint pose: q = A . (psi * delta_star) + o."""
    psi = np.asarray(psi, dtype=float)
    if psi.shape != (3,):
        raise ValueError(f"subspace point has shape {psi.shape}, expected (3,)")
    if not np.isfinite(psi).all():
        raise ValueError("subspace point has non-finite components")
    return m.A @ (psi * m.delta_star) + m.origin


def teleop_map(master: TeleopMapping, slave: TeleopMapping, q_m) -> tuple[np.ndarray, np.ndarray]:
    """Master joints -> slave joints through the shared subspace.

    Returns (q_s, psi) where psi is the intermediate subspace point. Equals
    project_from_subspace(slave, project_to_subspace(master, q_m)) exactly by
    construction.
    """
    psi = project_to_subspace(master, q_m)
    return project_from_subspace(slave, psi), psi


def compute_scaling(origin, A, extrema_poses) -> tuple[np.ndarray, np.ndarray, list[str]]:
    """Per-axis scaling from poses that exhibit the hand's kinematic extremes.

    Projects every pose with unit scaling, takes |max| + |min| of the
    projected values per axis as that axis's range, and returns
    delta = 1/range (0 for a degenerate axis) plus the matching delta_star.
    Also returns notes naming any degenerate axis.
    """
    origin = np.asarray(origin, dtype=float)
    A = np.asarray(A, dtype=float)
    poses = np.asarray(extrema_poses, dtype=float)
    if poses.ndim != 2 or poses.shape[0] == 0:
        raise ValueError("extrema_poses must be a nonempty list of poses")
    if poses.shape[1] != origin.shape[0]:
        raise ValueError(
            f"extrema poses have length {poses.shape[1]}, expected {origin.shape[0]}"
        )
    projected = (poses - origin) @ A  # unit delta
    delta = np.zeros(3)
    delta_star = np.zeros(3)
    notes = []
    for k in range(3):
        rng = abs(projected[:, k].max()) + abs(projected[:, k].min())
        if rng == 0.0:
            notes.append(f"degenerate {AXES[k]} axis: zero projected range, scaling disabled")
        else:
            delta[k] = 1.0 / rng
            delta_star[k] = rng
    return delta, delta_star, notes

"""Consensus fit of the teleoperation subspace to a grasp dataset.

A hypothesis is an origin grasp of the enveloping mid-size object plus unit
directions toward one grasp each of the three objects that differ from it
along exactly one axis (size, curl, spread). Directions are orthonormalized
in a random order via Gram-Schmidt, axis labels riding along. Hypotheses are
ranked by a 4-tier consensus score (higher minimum inliers per object, fewer
objects at that minimum, more inliers overall, smaller total distance), with
ties broken by hypothesis index so parallel and serial runs agree. After the
scan the origin moves to the grasp of the flat-pinch object closest to the
fitted subspace, and scaling comes from enumerating joint extrema over each
axis's relevant joints.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import multiprocessing

import numpy as np

from . import kernels
from .hands import HandModel
from .sampling import GraspDataset
from .subspace import TeleopMapping, compute_scaling

SIZE_SOURCE_OBJECT = 7
CURL_SOURCE_OBJECT = 4
SPREAD_SOURCE_OBJECT = 6
DEFAULT_ORIGIN_OBJECT = 8
DEFAULT_RELOCATION_OBJECT = 1
HUMAN_DEFAULT_XI = 0.1
PAPER_SCALE_M = 2_000_000  # paper-scale hypothesis count; desk default below

RELEVANT_TOL = 1e-6


class DegenerateBasisError(ValueError):
    """Sampled directions are linearly dependent (or vanish)."""


@dataclass(frozen=True)
class SubspaceHypothesis:
    origin: np.ndarray  # (N,)
    basis: np.ndarray  # (3, N), rows labeled (spread, size, curl)
    origin_index: int = -1  # row into the stacked dataset, -1 if external
    source_indices: tuple[int, int, int] = (-1, -1, -1)  # (spread, size, curl) rows


@dataclass(frozen=True)
class TieredScore:
    t1: int  # minimum inliers over objects
    t2: int  # objects attaining that minimum
    t3: int  # total inliers
    t4: float  # summed distance of all grasps


@dataclass(frozen=True)
class FitConfig:
    M: int = 20_000
    xi: float | None = None  # None: dataset's parsing threshold, else 0.1
    seed: int = 0
    delta_combo_cap: int = 4096
    origin_object: int = DEFAULT_ORIGIN_OBJECT
    relocation_object: int = DEFAULT_RELOCATION_OBJECT
    workers: int = 1


def score_key(score: TieredScore):
    """Lexicographic key; greater is better."""
    return (score.t1, -score.t2, score.t3, -score.t4)


def better_score(a: TieredScore, b: TieredScore) -> bool:
    """True when a strictly beats b under the tier order."""
    return score_key(a) > score_key(b)


def gram_schmidt(vectors) -> np.ndarray:
    """Orthonormalize in the given order; raises on (near-)dependence."""
    vecs = [np.asarray(v, dtype=float).copy() for v in vectors]
    out = []
    for v in vecs:
        for u in out:
            v = v - (v @ u) * u
        norm = float(np.linalg.norm(v))
        if norm < 1e-8:
            raise DegenerateBasisError("residual norm below 1e-8 during orthogonalization")
        out.append(v / norm)
    return np.stack(out)


class _Stacked:
    """Dataset rows stacked into one matrix with per-object index ranges."""

    def __init__(self, dataset: GraspDataset):
        rows = []
        obj_ids = []
        self.rows_of: dict[int, list[int]] = {}
        for obj_id in dataset.object_ids():
            idxs = []
            for g in dataset.grasps[obj_id]:
                idxs.append(len(rows))
                rows.append(np.asarray(g.q, dtype=float))
                obj_ids.append(obj_id - 1)
            self.rows_of[obj_id] = idxs
        if not rows:
            raise ValueError("dataset is empty")
        self.G = np.ascontiguousarray(np.stack(rows))
        self.obj_ids = np.asarray(obj_ids, dtype=np.int32)
        self.n_objects = 8

    def require(self, object_id: int) -> list[int]:
        idxs = self.rows_of.get(object_id, [])
        if not idxs:
            raise ValueError(f"dataset has no grasps for object {object_id}")
        return idxs


def _assemble(G, o_row, spread_row, size_row, curl_row, perm_code):
    """Basis (3, N) in label order from sampled rows; None when degenerate."""
    o = G[o_row]
    raw = np.stack([G[spread_row], G[size_row], G[curl_row]]) - o
    norms = np.linalg.norm(raw, axis=1)
    if (norms < 1e-12).any():
        return None
    raw = raw / norms[:, None]
    order = kernels.PERMS[perm_code]
    try:
        ortho = gram_schmidt([raw[order[0]], raw[order[1]], raw[order[2]]])
    except DegenerateBasisError:
        return None
    basis = np.zeros_like(raw)
    for pos in range(3):
        basis[order[pos]] = ortho[pos]
    return basis


def sample_hypothesis(
    dataset: GraspDataset,
    rng: np.random.Generator,
    origin_object: int = DEFAULT_ORIGIN_OBJECT,
    max_attempts: int = 1000,
) -> SubspaceHypothesis:
    """Draw one hypothesis; degenerate draws are rejected and resampled."""
    stacked = _Stacked(dataset)
    o_rows = stacked.require(origin_object)
    size_rows = stacked.require(SIZE_SOURCE_OBJECT)
    curl_rows = stacked.require(CURL_SOURCE_OBJECT)
    spread_rows = stacked.require(SPREAD_SOURCE_OBJECT)
    for _ in range(max_attempts):
        o_row = o_rows[rng.integers(len(o_rows))]
        size_row = size_rows[rng.integers(len(size_rows))]
        curl_row = curl_rows[rng.integers(len(curl_rows))]
        spread_row = spread_rows[rng.integers(len(spread_rows))]
        perm_code = int(rng.integers(6))
        basis = _assemble(stacked.G, o_row, spread_row, size_row, curl_row, perm_code)
        if basis is None:
            continue
        return SubspaceHypothesis(
            origin=stacked.G[o_row].copy(),
            basis=basis,
            origin_index=o_row,
            source_indices=(spread_row, size_row, curl_row),
        )
    raise DegenerateBasisError(f"no valid hypothesis in {max_attempts} attempts")


def point_to_subspace_distance(hyp: SubspaceHypothesis, g) -> float:
    """Distance from a joint vector to the hypothesis's affine subspace."""
    v = np.asarray(g, dtype=float) - hyp.origin
    residual = v.copy()
    for k in range(3):
        residual -= (hyp.basis[k] @ v) * hyp.basis[k]
    return float(np.linalg.norm(residual))


def _distances(hyp: SubspaceHypothesis, G: np.ndarray) -> np.ndarray:
    V = G - hyp.origin
    residual = V - (V @ hyp.basis.T) @ hyp.basis
    return np.sqrt((residual * residual).sum(axis=1))


def inliers_per_object(hyp: SubspaceHypothesis, dataset: GraspDataset, xi: float) -> np.ndarray:
    stacked = _Stacked(dataset)
    d = _distances(hyp, stacked.G)
    return np.bincount(stacked.obj_ids[d < xi], minlength=stacked.n_objects)


def score_hypothesis(hyp: SubspaceHypothesis, dataset: GraspDataset, xi: float) -> TieredScore:
    """Tiered consensus score of one hypothesis against the full dataset."""
    if xi <= 0:
        raise ValueError(f"xi must be positive, got {xi}")
    stacked = _Stacked(dataset)
    d = _distances(hyp, stacked.G)
    per_obj = np.bincount(stacked.obj_ids[d < xi], minlength=stacked.n_objects)
    t1 = int(per_obj.min())
    return TieredScore(
        t1=t1,
        t2=int((per_obj == t1).sum()),
        t3=int((d < xi).sum()),
        t4=float(d.sum()),
    )


def resolve_xi(dataset: GraspDataset, cfg: FitConfig) -> float:
    if cfg.xi is not None:
        return cfg.xi
    if dataset.xi_final is not None and dataset.xi_final > 0:
        return dataset.xi_final
    return HUMAN_DEFAULT_XI


def _scan_worker(args):
    (G, obj_ids, n_objects, o_idx, i_size, i_curl, i_spread, perm, xi, offset) = args
    return kernels.ransac_scan(
        G, obj_ids, n_objects, o_idx, i_size, i_curl, i_spread, perm, xi, offset
    )


def fit_subspace(dataset: GraspDataset, cfg: FitConfig) -> tuple[SubspaceHypothesis, TieredScore, dict]:
    """Evaluate cfg.M sampled hypotheses and return the tier-best.

    Deterministic for a given (dataset, cfg): draws are batched from one
    generator up front and ties go to the lower hypothesis index, so the
    result is identical for any worker count. Degenerate draws are skipped
    (they still count toward M); an all-degenerate scan is an error.
    """
    if cfg.M < 1:
        raise ValueError("M must be >= 1")
    stacked = _Stacked(dataset)
    o_rows = np.asarray(stacked.require(cfg.origin_object))
    size_rows = np.asarray(stacked.require(SIZE_SOURCE_OBJECT))
    curl_rows = np.asarray(stacked.require(CURL_SOURCE_OBJECT))
    spread_rows = np.asarray(stacked.require(SPREAD_SOURCE_OBJECT))
    xi = resolve_xi(dataset, cfg)
    if xi <= 0:
        raise ValueError(f"inlier threshold must be positive, got {xi}")

    rng = np.random.default_rng(cfg.seed)
    o_idx = o_rows[rng.integers(len(o_rows), size=cfg.M)]
    i_size = size_rows[rng.integers(len(size_rows), size=cfg.M)]
    i_curl = curl_rows[rng.integers(len(curl_rows), size=cfg.M)]
    i_spread = spread_rows[rng.integers(len(spread_rows), size=cfg.M)]
    perm = rng.integers(6, size=cfg.M)

    o_idx = np.ascontiguousarray(o_idx, dtype=np.int64)
    i_size = np.ascontiguousarray(i_size, dtype=np.int64)
    i_curl = np.ascontiguousarray(i_curl, dtype=np.int64)
    i_spread = np.ascontiguousarray(i_spread, dtype=np.int64)
    perm = np.ascontiguousarray(perm, dtype=np.int64)

    workers = max(1, cfg.workers)
    if workers == 1:
        results = [
            kernels.ransac_scan(
                stacked.G, stacked.obj_ids, stacked.n_objects,
                o_idx, i_size, i_curl, i_spread, perm, xi, 0,
            )
        ]
    else:
        chunk = math.ceil(cfg.M / workers)
        tasks = []
        for lo in range(0, cfg.M, chunk):
            hi = min(lo + chunk, cfg.M)
            tasks.append(
                (
                    stacked.G, stacked.obj_ids, stacked.n_objects,
                    o_idx[lo:hi], i_size[lo:hi], i_curl[lo:hi], i_spread[lo:hi],
                    perm[lo:hi], xi, lo,
                )
            )
        ctx = multiprocessing.get_context("spawn")
        with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as pool:
            results = list(pool.map(_scan_worker, tasks))

    best = None
    n_degenerate = 0
    for res in results:
        idx, t1, t2, t3, t4, basis, per_obj, degen = res
        n_degenerate += degen
        if idx < 0:
            continue
        key = (t1, -t2, t3, -t4, -idx)
        if best is None or key > best[0]:
            best = (key, idx, TieredScore(t1, t2, t3, t4), basis, per_obj)
    if best is None:
        raise DegenerateBasisError("every sampled hypothesis was degenerate")

    _, idx, score, basis, per_obj = best
    hyp = SubspaceHypothesis(
        origin=stacked.G[o_idx[idx]].copy(),
        basis=np.asarray(basis),
        origin_index=int(o_idx[idx]),
        source_indices=(int(i_spread[idx]), int(i_size[idx]), int(i_curl[idx])),
    )
    info = {
        "xi": xi,
        "best_index": int(idx),
        "per_object_inliers": [int(v) for v in per_obj],
        "n_degenerate": int(n_degenerate),
    }
    return hyp, score, info


def relocate_origin(
    hyp: SubspaceHypothesis,
    dataset: GraspDataset | None = None,
    calibration_pose=None,
    relocation_object: int = DEFAULT_RELOCATION_OBJECT,
) -> SubspaceHypothesis:
    """Move the origin to a better-anchored pose; the basis never changes.

    Robot path: the relocation object's grasp closest to the fitted subspace.
    Human path: a supplied calibration pose, verbatim.
    """
    if calibration_pose is not None:
        origin = np.asarray(calibration_pose, dtype=float)
        return SubspaceHypothesis(
            origin=origin, basis=hyp.basis, origin_index=-1, source_indices=hyp.source_indices
        )
    if dataset is None:
        raise ValueError("need a dataset or a calibration pose to relocate the origin")
    grasps = dataset.require(relocation_object)
    best_row = None
    best_d = math.inf
    for i, g in enumerate(grasps):
        d = point_to_subspace_distance(hyp, g.q)
        if d < best_d:
            best_d = d
            best_row = i
    g = grasps[best_row]
    return SubspaceHypothesis(
        origin=np.asarray(g.q, dtype=float).copy(),
        basis=hyp.basis,
        origin_index=-1,
        source_indices=hyp.source_indices,
    )


def extrema_from_limits(model: HandModel, hyp: SubspaceHypothesis, cfg: FitConfig):
    """Kinematic-extreme poses per axis from the relevant joints' limit combos.

    Joints with |basis entry| > 1e-6 are relevant to an axis; all 2^k min/max
    combinations are enumerated (others held at the origin), or
    cfg.delta_combo_cap combinations are sampled with the config seed when 2^k
    explodes. Returns (poses, notes).
    """
    lo, hi = model.joint_min, model.joint_max
    rng = np.random.default_rng(cfg.seed)
    poses = []
    notes = []
    for k in range(3):
        rel = [j for j in range(model.dof) if abs(hyp.basis[k, j]) > RELEVANT_TOL]
        if not rel:
            continue
        n_combos = 2 ** len(rel)
        if n_combos <= cfg.delta_combo_cap:
            combos = (
                [(c >> b) & 1 for b in range(len(rel))] for c in range(n_combos)
            )
        else:
            notes.append(
                f"axis {k}: sampled {cfg.delta_combo_cap} of {n_combos} extrema combinations"
            )
            combos = rng.integers(0, 2, size=(cfg.delta_combo_cap, len(rel)))
        for bits in combos:
            pose = hyp.origin.copy()
            for b, j in enumerate(rel):
                pose[j] = hi[j] if bits[b] else lo[j]
            poses.append(pose)
    return poses, notes


def build_algorithmic_mapping(
    model: HandModel,
    fitted: SubspaceHypothesis,
    cfg: FitConfig,
    extrema_poses=None,
    provenance_extra: dict | None = None,
) -> TeleopMapping:
    """Mapping from a fitted (and already relocated) hypothesis.

    Scaling uses supplied calibration extrema when given, otherwise the
    enumerated joint-limit extrema.
    """
    notes = []
    if extrema_poses is not None:
        poses = [np.asarray(p, dtype=float) for p in extrema_poses]
        delta_source = "calibration-extrema"
    else:
        poses, notes = extrema_from_limits(model, fitted, cfg)
        delta_source = "joint-extrema"
    A = np.ascontiguousarray(fitted.basis.T)
    delta, delta_star, scale_notes = compute_scaling(fitted.origin, A, poses)
    provenance = {
        "method": "ransac",
        "seed": cfg.seed,
        "dataset_digest": None,
        "delta_source": delta_source,
    }
    all_notes = notes + scale_notes
    if all_notes:
        provenance["notes"] = all_notes
    if provenance_extra:
        provenance.update(provenance_extra)
    return TeleopMapping(
        hand_id=model.hand_id,
        dof=model.dof,
        origin=fitted.origin.copy(),
        A=A,
        delta=delta,
        delta_star=delta_star,
        provenance=provenance,
    )

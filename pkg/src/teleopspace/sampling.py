"""Stable-grasp dataset synthesis, scoring, and parsing.

Grasps are found by random search: sample an object position in the hand's
workspace and a pre-grasp pose within joint limits, close the flexion joints
until contact or limit, and keep candidates whose contacts oppose each other
and match the object's mandated grasp type (precision touches with distal
links only; power needs at least one proximal-link contact). Each kept
candidate is re-evaluated under positive, negative, and zero offsets along
every object-position and joint axis, 3*(3+N) evaluations in all, and stores
the worst quality seen. Datasets are thinned by an escalating joint-space
threshold until every object holds fewer than 20 grasps.
"""

from __future__ import annotations

import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import multiprocessing

import numpy as np

from . import kernels
from .hands import HandModel, as_pose, forward_kinematics
from .kernels import PackedHand, pack_hand, reference
from .objects import ObjectSpec, grasp_width_m, object_params

POSITION_PERTURBATION = 0.005  # m, per object axis
JOINT_PERTURBATION = 0.05  # rad, per joint
DEFAULT_MU = 0.5
DEFAULT_DIRECTIONS = 2048
OPPOSING_DOT = -0.5
VALID_CAP = 1000


@dataclass(frozen=True)
class Grasp:
    object_id: int
    q: np.ndarray
    quality: float
    grasp_type: str
    object_pose: np.ndarray  # object center, palm frame


@dataclass
class GraspDataset:
    hand_id: str
    dof: int
    grasps: dict[int, list[Grasp]]
    xi_final: float | None = None
    provenance: dict = field(default_factory=dict)

    def object_ids(self) -> list[int]:
        return sorted(self.grasps)

    def require(self, object_id: int) -> list[Grasp]:
        lst = self.grasps.get(object_id, [])
        if not lst:
            raise ValueError(f"dataset has no grasps for object {object_id}")
        return lst


@lru_cache(maxsize=8)
def quality_directions(count: int = DEFAULT_DIRECTIONS) -> np.ndarray:
    """Fixed unit directions in wrench space shared by every quality call."""
    rng = np.random.default_rng(916180)
    d = rng.standard_normal((count, 6))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    d.flags.writeable = False
    return d


def hand_span(model: HandModel) -> tuple[float, float]:
    """(max fingertip-pair aperture, max fingertip reach) over joint-limit poses."""
    lo, hi = model.joint_min, model.joint_max
    n = model.dof
    if n <= 12:
        poses = [
            [hi[j] if (c >> j) & 1 else lo[j] for j in range(n)] for c in range(2**n)
        ]
    else:
        rng = np.random.default_rng(12345)
        poses = list(rng.uniform(lo, hi, size=(4096, n)))
    aperture = 0.0
    reach = 0.0
    for pose in poses:
        tips = [fk.fingertip for fk in forward_kinematics(model, pose)]
        for t in tips:
            reach = max(reach, float(np.linalg.norm(t)))
        for i in range(len(tips)):
            for j in range(i + 1, len(tips)):
                aperture = max(aperture, float(np.linalg.norm(tips[i] - tips[j])))
    return aperture, reach


def workspace_box(reach: float, half_thickness: float):
    """Object-center sampling box in front of the palm, sized to the hand."""
    lateral = 0.4 * reach
    return (
        (-lateral, lateral),
        (-lateral, lateral),
        (half_thickness + 0.004, 0.85 * reach),
    )


def classify_contacts(packed: PackedHand, contacts, grasp_type: str):
    """(valid, failure_reason) for a closed candidate's contact set."""
    if len(contacts) == 0:
        return False, "no_contact"
    if len(contacts) == 1:
        return False, "single_contact"
    opposing = False
    for i in range(len(contacts)):
        for j in range(i + 1, len(contacts)):
            if float(contacts[i][2] @ contacts[j][2]) < OPPOSING_DOT:
                opposing = True
                break
        if opposing:
            break
    if not opposing:
        return False, "not_opposing"
    distal = [bool(packed.link_is_distal[c[0]]) for c in contacts]
    if grasp_type == "precision":
        if not all(distal):
            return False, "proximal_contact"
    else:
        if all(distal):
            return False, "no_proximal_contact"
    return True, None


def _single_eval(packed, op, pos, q_pre, grasp_type, mu, rho, dirs):
    kind, oa, ob, oc = op
    q, contacts, status = kernels.close_fingers(
        packed, kind, oa, ob, oc, float(pos[0]), float(pos[1]), float(pos[2]), q_pre
    )
    if status == kernels.STATUS_PREGRASP_COLLISION:
        return False, q, 0.0, "pregrasp_collision"
    if status != kernels.STATUS_OK:
        return False, q, 0.0, "closing_collision"
    ok, failure = classify_contacts(packed, contacts, grasp_type)
    if not ok:
        return False, q, 0.0, failure
    rel = np.array([c[1] for c in contacts])
    nrm = np.array([c[2] for c in contacts])
    return True, q, kernels.wrench_quality(rel, nrm, mu, rho, dirs), None


def _evaluate_range(packed, obj, op, box, seed, lo, hi, mu, rho, dirs, cap):
    """Evaluate candidate indices [lo, hi); stop early once `cap` are valid."""
    n = packed.n_joints
    perturb = [POSITION_PERTURBATION] * 3 + [JOINT_PERTURBATION] * n
    found = []
    failures = Counter()
    evaluated = 0
    perturbation_evals = 0
    for i in range(lo, hi):
        rng = np.random.default_rng([seed, obj.id, i])
        pos = rng.uniform(
            [box[0][0], box[1][0], box[2][0]], [box[0][1], box[1][1], box[2][1]]
        )
        q_pre = rng.uniform(packed.jmin, packed.jmax)
        evaluated += 1
        ok, q_center, _, failure = _single_eval(
            packed, op, pos, q_pre, obj.grasp_type, mu, rho, dirs
        )
        if not ok:
            failures[failure] += 1
            continue
        qualities = []
        for dim in range(3 + n):
            for offset in (perturb[dim], -perturb[dim], 0.0):
                p2 = pos.copy()
                q2 = q_pre.copy()
                if dim < 3:
                    p2[dim] += offset
                else:
                    q2[dim - 3] += offset
                okp, _, qual, _ = _single_eval(
                    packed, op, p2, q2, obj.grasp_type, mu, rho, dirs
                )
                qualities.append(qual if okp else 0.0)
                perturbation_evals += 1
        found.append(
            (i, Grasp(obj.id, q_center, min(qualities), obj.grasp_type, pos.copy()))
        )
        if len(found) >= cap:
            break
    return found, failures, evaluated, perturbation_evals


def sample_grasps(
    model: HandModel,
    obj: ObjectSpec,
    budget: int,
    seed: int,
    *,
    workers: int = 1,
    max_grasps: int = VALID_CAP,
    mu: float = DEFAULT_MU,
    directions_count: int = DEFAULT_DIRECTIONS,
) -> tuple[list[Grasp], dict]:
    """Random-search grasps for one object; deterministic given the seed.

    Candidate i draws from its own generator seeded (seed, object id, i), so
    results are identical to a sequential run for any worker count. Returns
    the grasps plus a diagnostics dict (failure histogram, counters, search
    box).
    """
    if budget <= 0:
        raise ValueError(f"budget must be positive, got {budget}")
    packed = pack_hand(model)
    op = object_params(obj)
    aperture, reach = hand_span(model)
    half_thickness = op[2] if op[0] == 0 else op[3]
    diagnostics = {
        "object_id": obj.id,
        "aperture_m": aperture,
        "reach_m": reach,
        "budget": budget,
        "candidates_evaluated": 0,
        "perturbation_evals": 0,
        "valid": 0,
        "failures": {},
        "stopped_by": "budget",
    }
    if grasp_width_m(obj) > aperture:
        diagnostics["failures"] = {"aperture_exceeded": budget}
        return [], diagnostics
    box = workspace_box(reach, half_thickness)
    diagnostics["workspace_box"] = box
    rho = max(op[1:])
    dirs = quality_directions(directions_count)

    if workers <= 1:
        found, failures, evaluated, pert = _evaluate_range(
            packed, obj, op, box, seed, 0, budget, mu, rho, dirs, max_grasps
        )
    else:
        chunk = math.ceil(budget / workers)
        spans = [(lo, min(lo + chunk, budget)) for lo in range(0, budget, chunk)]
        ctx = multiprocessing.get_context("spawn")
        with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as pool:
            parts = list(
                pool.map(
                    _range_worker,
                    [
                        (packed, obj, op, box, seed, lo, hi, mu, rho, dirs, max_grasps)
                        for lo, hi in spans
                    ],
                )
            )
        found = []
        failures = Counter()
        evaluated = 0
        pert = 0
        for f, fl, ev, pe in parts:
            found.extend(f)
            failures.update(fl)
            evaluated += ev
            pert += pe
        found.sort(key=lambda pair: pair[0])
        found = found[:max_grasps]

    grasps = [g for _, g in found]
    diagnostics["candidates_evaluated"] = evaluated
    diagnostics["perturbation_evals"] = pert
    diagnostics["valid"] = len(grasps)
    diagnostics["failures"] = dict(failures)
    if len(grasps) >= max_grasps:
        diagnostics["stopped_by"] = "cap"
    return grasps, diagnostics


def _range_worker(args):
    (packed, obj, op, box, seed, lo, hi, mu, rho, dirs, cap) = args
    return _evaluate_range(packed, obj, op, box, seed, lo, hi, mu, rho, dirs, cap)


def contacts_at(packed: PackedHand, obj: ObjectSpec, object_pose, q):
    """Contact set of an already-closed pose, recomputed from FK geometry.

    Backend-independent (uses the pure reference geometry); used to audit
    sampled grasps and by the public quality entry point.
    """
    kind, oa, ob, oc = object_params(obj)
    ox, oy, oz = (float(v) for v in object_pose)
    contacts = []
    for fi in range(packed.n_fingers):
        segs = reference._finger_geometry(packed, fi, [float(v) for v in q])
        start = int(packed.link_start[fi])
        for off, seg in enumerate(segs):
            d, t = reference._seg_min(
                kind, oa, ob, oc,
                seg[0] - ox, seg[1] - oy, seg[2] - oz,
                seg[3] - ox, seg[4] - oy, seg[5] - oz,
            )
            if d <= kernels.CONTACT_TOL:
                px = seg[0] - ox + t * (seg[3] - seg[0])
                py = seg[1] - oy + t * (seg[4] - seg[1])
                pz = seg[2] - oz + t * (seg[5] - seg[2])
                _, cpt, nrm = reference._surface_full(kind, oa, ob, oc, px, py, pz)
                contacts.append((start + off, np.array(cpt), np.array(nrm), d))
    return contacts


def grasp_quality(
    model: HandModel,
    grasp: Grasp,
    obj: ObjectSpec,
    friction_mu: float = DEFAULT_MU,
    directions_count: int = DEFAULT_DIRECTIONS,
) -> float:
    """Sampled force-closure-style score of one grasp; 0 means no closure evidence."""
    packed = pack_hand(model)
    contacts = contacts_at(packed, obj, grasp.object_pose, as_pose(model, grasp.q))
    if not contacts:
        return 0.0
    rel = np.array([c[1] for c in contacts])
    nrm = np.array([c[2] for c in contacts])
    op = object_params(obj)
    return kernels.wrench_quality(
        rel, nrm, friction_mu, max(op[1:]), quality_directions(directions_count)
    )


def parse_dataset(dataset: GraspDataset) -> GraspDataset:
    """Thin each object's grasps with the escalating distance threshold.

    Grasps are ranked by quality (ties keep insertion order); a grasp closer
    than the threshold to any higher-ranked grasp is dropped. The threshold
    starts at 0.0 and rises by 0.1 until every object keeps fewer than 20.
    """
    ranked: dict[int, list[int]] = {}
    nearest: dict[int, np.ndarray] = {}
    for obj_id in dataset.object_ids():
        grasps = dataset.require(obj_id)
        order = sorted(range(len(grasps)), key=lambda i: (-grasps[i].quality, i))
        Q = np.array([grasps[i].q for i in order], dtype=float)
        n = len(order)
        m = np.full(n, np.inf)
        for pos in range(1, n):
            diff = Q[:pos] - Q[pos]
            m[pos] = float(np.sqrt((diff * diff).sum(axis=1)).min())
        ranked[obj_id] = order
        nearest[obj_id] = m

    k = 0
    while True:
        xi = k / 10.0
        if all((nearest[o] >= xi).sum() < 20 for o in ranked):
            break
        k += 1
        if k > 100000:
            raise RuntimeError("parsing threshold escalation failed to terminate")

    out: dict[int, list[Grasp]] = {}
    for obj_id, order in ranked.items():
        grasps = dataset.grasps[obj_id]
        keep = nearest[obj_id] >= xi
        out[obj_id] = [grasps[order[pos]] for pos in range(len(order)) if keep[pos]]
    provenance = dict(dataset.provenance)
    provenance["parsed"] = True
    return GraspDataset(
        hand_id=dataset.hand_id,
        dof=dataset.dof,
        grasps=out,
        xi_final=xi,
        provenance=provenance,
    )

"""File formats and canonical serialization.

Every document carries a schema id. Writers emit canonical JSON: fixed key
order, compact separators, floats printed with up to 17 significant digits so
doubles round-trip exactly; save -> load -> save is byte-identical. Datasets
and trajectories are JSON Lines.
"""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path

import numpy as np

from .baselines import FingertipConfig, IkParams, JointCorrespondence
from .empirical import ExtremaPoses, MotionAssignment
from .hands import FingerChain, HandModel, JointSpec, LinkSpec
from .sampling import Grasp, GraspDataset
from .subspace import TeleopMapping

HAND_SCHEMA = "hand-model/1"
MAPPING_SCHEMA = "teleop-mapping/1"
ASSIGNMENT_SCHEMA = "motion-assignment/1"
EXTREMA_SCHEMA = "extrema-poses/1"
DATASET_SCHEMA = "grasp-dataset/1"
CORRESPONDENCE_SCHEMA = "joint-correspondence/1"
FINGERTIP_SCHEMA = "fingertip-config/1"
REPORT_SCHEMA = "ransac-report/1"
SESSION_SCHEMA = "session-config/1"


class SchemaError(ValueError):
    """A document violates its file format."""


def canonical_number(x: float) -> str:
    v = float(x)
    if not math.isfinite(v):
        raise SchemaError("non-finite number cannot be serialized")
    return format(v, ".17g")


def dumps_canonical(obj) -> str:
    """Compact JSON with deterministic float formatting and insertion order."""
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return canonical_number(obj)
    if isinstance(obj, np.ndarray):
        return dumps_canonical(obj.tolist())
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(dumps_canonical(v) for v in obj) + "]"
    if isinstance(obj, dict):
        parts = []
        for k, v in obj.items():
            if not isinstance(k, str):
                raise SchemaError(f"non-string key {k!r}")
            parts.append(json.dumps(k, ensure_ascii=False) + ":" + dumps_canonical(v))
        return "{" + ",".join(parts) + "}"
    raise SchemaError(f"cannot serialize {type(obj).__name__}")


def write_document(path, payload: dict) -> None:
    Path(path).write_text(dumps_canonical(payload) + "\n", encoding="utf-8")


def read_document(path, schema: str) -> dict:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise SchemaError(f"{path}: not valid JSON ({e})") from e
    if not isinstance(payload, dict):
        raise SchemaError(f"{path}: expected a JSON object")
    found = payload.get("schema")
    if found != schema:
        raise SchemaError(f"{path}: schema is {found!r}, expected {schema!r}")
    return payload


def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _expect_keys(d: dict, where: str, required: tuple, optional: tuple = ()):
    for k in required:
        if k not in d:
            raise SchemaError(f"{where}: missing field '{k}'")
    for k in d:
        if k not in required and k not in optional:
            raise SchemaError(f"{where}: unknown field '{k}'")


def _floats(values, where: str, length: int | None = None) -> list[float]:
    if not isinstance(values, (list, tuple)):
        raise SchemaError(f"{where}: expected an array")
    if length is not None and len(values) != length:
        raise SchemaError(f"{where}: expected {length} entries, got {len(values)}")
    out = []
    for v in values:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise SchemaError(f"{where}: expected numbers")
        out.append(float(v))
    return out


# --- hand models ---

def save_hand_model(path, model: HandModel) -> None:
    payload = {
        "schema": HAND_SCHEMA,
        "hand_id": model.hand_id,
        "dof": model.dof,
        "scale": float(model.scale),
        "joints": [
            {"name": j.name, "min": float(j.min), "max": float(j.max)} for j in model.joints
        ],
        "fingers": [
            {
                "name": f.name,
                "base_pose": {
                    "pos": [float(v) for v in f.base_pos],
                    "quat": [float(v) for v in f.base_quat],
                },
                "links": [
                    {
                        "length": float(l.length),
                        "joint_index": int(l.joint_index),
                        "axis": [float(v) for v in l.axis],
                    }
                    for l in f.links
                ],
            }
            for f in model.fingers
        ],
    }
    write_document(path, payload)


def load_hand_model(path) -> HandModel:
    d = read_document(path, HAND_SCHEMA)
    _expect_keys(d, str(path), ("schema", "hand_id", "dof", "scale", "joints", "fingers"))
    joints = []
    for i, j in enumerate(d["joints"]):
        _expect_keys(j, f"joints[{i}]", ("name", "min", "max"))
        joints.append(JointSpec(name=j["name"], min=float(j["min"]), max=float(j["max"])))
    fingers = []
    for i, f in enumerate(d["fingers"]):
        _expect_keys(f, f"fingers[{i}]", ("name", "base_pose", "links"))
        _expect_keys(f["base_pose"], f"fingers[{i}].base_pose", ("pos", "quat"))
        links = []
        for k, l in enumerate(f["links"]):
            _expect_keys(l, f"fingers[{i}].links[{k}]", ("length", "joint_index", "axis"))
            links.append(
                LinkSpec(
                    length=float(l["length"]),
                    joint_index=int(l["joint_index"]),
                    axis=tuple(_floats(l["axis"], f"fingers[{i}].links[{k}].axis", 3)),
                )
            )
        fingers.append(
            FingerChain(
                name=f["name"],
                base_pos=tuple(_floats(f["base_pose"]["pos"], f"fingers[{i}].pos", 3)),
                base_quat=tuple(_floats(f["base_pose"]["quat"], f"fingers[{i}].quat", 4)),
                links=tuple(links),
            )
        )
    return HandModel(
        hand_id=d["hand_id"],
        dof=int(d["dof"]),
        scale=float(d["scale"]),
        joints=tuple(joints),
        fingers=tuple(fingers),
    )


# --- teleoperation mappings ---

def save_mapping(path, m: TeleopMapping) -> None:
    payload = {
        "schema": MAPPING_SCHEMA,
        "hand_id": m.hand_id,
        "dof": m.dof,
        "origin": [float(v) for v in m.origin],
        "A": {
            "alpha": [float(v) for v in m.A[:, 0]],
            "sigma": [float(v) for v in m.A[:, 1]],
            "epsilon": [float(v) for v in m.A[:, 2]],
        },
        "delta": [float(v) for v in m.delta],
        "delta_star": [float(v) for v in m.delta_star],
        "provenance": m.provenance,
    }
    write_document(path, payload)


def load_mapping(path) -> TeleopMapping:
    d = read_document(path, MAPPING_SCHEMA)
    _expect_keys(
        d,
        str(path),
        ("schema", "hand_id", "dof", "origin", "A", "delta", "delta_star", "provenance"),
    )
    dof = int(d["dof"])
    A = np.zeros((dof, 3))
    for k, name in enumerate(("alpha", "sigma", "epsilon")):
        if name not in d["A"]:
            raise SchemaError(f"{path}: A is missing row '{name}'")
        A[:, k] = _floats(d["A"][name], f"A.{name}", dof)
    return TeleopMapping(
        hand_id=d["hand_id"],
        dof=dof,
        origin=np.asarray(_floats(d["origin"], "origin", dof)),
        A=A,
        delta=np.asarray(_floats(d["delta"], "delta", 3)),
        delta_star=np.asarray(_floats(d["delta_star"], "delta_star", 3)),
        provenance=dict(d["provenance"]),
    )


# --- motion assignments and extrema poses ---

def save_assignment(path, hand_id: str, assign: MotionAssignment) -> None:
    payload = {
        "schema": ASSIGNMENT_SCHEMA,
        "hand_id": hand_id,
        "spread": [{"joint": j, "sign": s} for j, s in sorted(assign.spread.items())],
        "open": [{"joint": j, "sign": s} for j, s in sorted(assign.size.items())],
        "curl": [{"joint": j, "sign": s} for j, s in sorted(assign.curl.items())],
    }
    write_document(path, payload)


def load_assignment(path) -> tuple[str, MotionAssignment]:
    d = read_document(path, ASSIGNMENT_SCHEMA)
    _expect_keys(d, str(path), ("schema", "hand_id", "spread", "open", "curl"))

    def parse(entries, where):
        out = {}
        for e in entries:
            _expect_keys(e, where, ("joint", "sign"))
            out[int(e["joint"])] = int(e["sign"])
        return out

    return d["hand_id"], MotionAssignment(
        spread=parse(d["spread"], "spread"),
        size=parse(d["open"], "open"),
        curl=parse(d["curl"], "curl"),
    )


def save_extrema(path, extrema: ExtremaPoses) -> None:
    payload = {
        "schema": EXTREMA_SCHEMA,
        "alpha": [[float(v) for v in p] for p in extrema.spread],
        "sigma": [[float(v) for v in p] for p in extrema.size],
        "epsilon": [[float(v) for v in p] for p in extrema.curl],
    }
    write_document(path, payload)


def load_extrema(path) -> ExtremaPoses:
    d = read_document(path, EXTREMA_SCHEMA)
    _expect_keys(d, str(path), ("schema", "alpha", "sigma", "epsilon"))

    def poses(rows, where):
        return tuple(np.asarray(_floats(r, where), dtype=float) for r in rows)

    return ExtremaPoses(
        spread=poses(d["alpha"], "alpha"),
        size=poses(d["sigma"], "sigma"),
        curl=poses(d["epsilon"], "epsilon"),
    )


# --- grasp datasets (JSON Lines) ---

def save_dataset(path, dataset: GraspDataset) -> None:
    lines = [
        dumps_canonical(
            {
                "schema": DATASET_SCHEMA,
                "hand_id": dataset.hand_id,
                "dof": dataset.dof,
                "xi_final": dataset.xi_final,
                "provenance": dataset.provenance,
            }
        )
    ]
    for obj_id in dataset.object_ids():
        for g in dataset.grasps[obj_id]:
            lines.append(
                dumps_canonical(
                    {
                        "object_id": g.object_id,
                        "q": [float(v) for v in g.q],
                        "quality": float(g.quality),
                        "grasp_type": g.grasp_type,
                        "object_pose": [float(v) for v in g.object_pose],
                    }
                )
            )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_dataset(path) -> GraspDataset:
    text = Path(path).read_text(encoding="utf-8")
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise SchemaError(f"{path}: empty dataset file")
    header = json.loads(lines[0])
    if header.get("schema") != DATASET_SCHEMA:
        raise SchemaError(f"{path}: first line must carry schema {DATASET_SCHEMA!r}")
    _expect_keys(header, str(path), ("schema", "hand_id", "dof", "xi_final", "provenance"))
    dof = int(header["dof"])
    grasps: dict[int, list[Grasp]] = {}
    for ln_no, ln in enumerate(lines[1:], start=2):
        g = json.loads(ln)
        _expect_keys(
            g, f"{path}:{ln_no}", ("object_id", "q", "quality", "grasp_type", "object_pose")
        )
        if g["grasp_type"] not in ("power", "precision"):
            raise SchemaError(f"{path}:{ln_no}: bad grasp_type {g['grasp_type']!r}")
        grasps.setdefault(int(g["object_id"]), []).append(
            Grasp(
                object_id=int(g["object_id"]),
                q=np.asarray(_floats(g["q"], f"{path}:{ln_no}.q", dof)),
                quality=float(g["quality"]),
                grasp_type=g["grasp_type"],
                object_pose=np.asarray(_floats(g["object_pose"], f"{path}:{ln_no}.object_pose", 3)),
            )
        )
    xi = header["xi_final"]
    return GraspDataset(
        hand_id=header["hand_id"],
        dof=dof,
        grasps=grasps,
        xi_final=None if xi is None else float(xi),
        provenance=dict(header["provenance"]),
    )


def merge_datasets(datasets: list[GraspDataset]) -> GraspDataset:
    if not datasets:
        raise SchemaError("nothing to merge")
    first = datasets[0]
    merged: dict[int, list[Grasp]] = {}
    for ds in datasets:
        if ds.hand_id != first.hand_id or ds.dof != first.dof:
            raise SchemaError("datasets disagree on hand")
        for obj_id, lst in ds.grasps.items():
            merged.setdefault(obj_id, []).extend(lst)
    return GraspDataset(
        hand_id=first.hand_id,
        dof=first.dof,
        grasps=merged,
        xi_final=None,
        provenance=dict(first.provenance),
    )


# --- joint correspondences and fingertip configs ---

def save_correspondence(path, corr: JointCorrespondence) -> None:
    payload = {
        "schema": CORRESPONDENCE_SCHEMA,
        "master_hand": corr.master_hand,
        "slave_hand": corr.slave_hand,
        "pairs": [[int(a), int(b)] for a, b in corr.pairs],
    }
    write_document(path, payload)


def load_correspondence(path) -> JointCorrespondence:
    d = read_document(path, CORRESPONDENCE_SCHEMA)
    _expect_keys(d, str(path), ("schema", "master_hand", "slave_hand", "pairs"))
    pairs = []
    for p in d["pairs"]:
        if not isinstance(p, list) or len(p) != 2:
            raise SchemaError(f"{path}: each pair must be [master, slave]")
        pairs.append((int(p[0]), int(p[1])))
    return JointCorrespondence(
        master_hand=d["master_hand"], slave_hand=d["slave_hand"], pairs=tuple(pairs)
    )


def save_fingertip_config(path, cfg: FingertipConfig) -> None:
    payload = {
        "schema": FINGERTIP_SCHEMA,
        "master_hand": cfg.master_hand,
        "slave_hand": cfg.slave_hand,
        "finger_pairs": [[a, b] for a, b in cfg.finger_pairs],
        "scale": float(cfg.scale),
        "ik": {
            "max_iters": cfg.ik.max_iters,
            "damping": float(cfg.ik.damping),
            "tolerance": float(cfg.ik.tolerance),
        },
    }
    write_document(path, payload)


def load_fingertip_config(path) -> FingertipConfig:
    d = read_document(path, FINGERTIP_SCHEMA)
    _expect_keys(
        d, str(path), ("schema", "master_hand", "slave_hand", "finger_pairs", "scale", "ik")
    )
    _expect_keys(d["ik"], f"{path}.ik", ("max_iters", "damping", "tolerance"))
    return FingertipConfig(
        master_hand=d["master_hand"],
        slave_hand=d["slave_hand"],
        finger_pairs=tuple((a, b) for a, b in d["finger_pairs"]),
        scale=float(d["scale"]),
        ik=IkParams(
            max_iters=int(d["ik"]["max_iters"]),
            damping=float(d["ik"]["damping"]),
            tolerance=float(d["ik"]["tolerance"]),
        ),
    )


# --- fit reports ---

def save_report(path, report: dict) -> None:
    payload = {"schema": REPORT_SCHEMA}
    payload.update(report)
    write_document(path, payload)


def load_report(path) -> dict:
    d = read_document(path, REPORT_SCHEMA)
    _expect_keys(
        d,
        str(path),
        ("schema", "cfg", "best_score", "per_object_inliers", "runtime_seconds"),
    )
    return d


# --- trajectories (JSON Lines of {t, q}) ---

def save_trajectory(path, steps) -> None:
    lines = [dumps_canonical({"t": float(t), "q": [float(v) for v in q]}) for t, q in steps]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def load_trajectory(path) -> list[tuple[float, np.ndarray]]:
    out = []
    for ln_no, ln in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not ln.strip():
            continue
        d = json.loads(ln)
        _expect_keys(d, f"{path}:{ln_no}", ("t", "q"))
        out.append((float(d["t"]), np.asarray(_floats(d["q"], f"{path}:{ln_no}.q"))))
    return out

"""Regenerate the shipped data files in src/teleopspace/data.

Run from the repository root:  python3 scripts/make_data.py
"""

from __future__ import annotations

import math
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from teleopspace import storage
from teleopspace.baselines import FingertipConfig, IkParams, JointCorrespondence
from teleopspace.empirical import ExtremaPoses, MotionAssignment, build_empirical_mapping
from teleopspace.hands import FingerChain, HandModel, JointSpec, LinkSpec, validate_model
from teleopspace.subspace import project_from_subspace

DATA = Path(__file__).resolve().parents[1] / "src" / "teleopspace" / "data"


def quat_from_matrix(R: np.ndarray) -> tuple[float, float, float, float]:
    tr = R[0, 0] + R[1, 1] + R[2, 2]
    if tr > 0:
        s = math.sqrt(tr + 1.0) * 2
        w = 0.25 * s
        x = (R[2, 1] - R[1, 2]) / s
        y = (R[0, 2] - R[2, 0]) / s
        z = (R[1, 0] - R[0, 1]) / s
    elif R[0, 0] > R[1, 1] and R[0, 0] > R[2, 2]:
        s = math.sqrt(1.0 + R[0, 0] - R[1, 1] - R[2, 2]) * 2
        w = (R[2, 1] - R[1, 2]) / s
        x = 0.25 * s
        y = (R[0, 1] + R[1, 0]) / s
        z = (R[0, 2] + R[2, 0]) / s
    elif R[1, 1] > R[2, 2]:
        s = math.sqrt(1.0 + R[1, 1] - R[0, 0] - R[2, 2]) * 2
        w = (R[0, 2] - R[2, 0]) / s
        x = (R[0, 1] + R[1, 0]) / s
        y = 0.25 * s
        z = (R[1, 2] + R[2, 1]) / s
    else:
        s = math.sqrt(1.0 + R[2, 2] - R[0, 0] - R[1, 1]) * 2
        w = (R[1, 0] - R[0, 1]) / s
        x = (R[0, 2] + R[2, 0]) / s
        y = (R[1, 2] + R[2, 1]) / s
        z = 0.25 * s
    n = math.sqrt(w * w + x * x + y * y + z * z)
    return (w / n, x / n, y / n, z / n)


def finger_base(pos, curl_dir) -> tuple[tuple, tuple]:
    """Base pose with the long axis along palm +z and curl toward curl_dir."""
    x = np.array([0.0, 0.0, 1.0])
    z = -np.asarray(curl_dir, dtype=float)
    z = z / np.linalg.norm(z)
    y = np.cross(z, x)
    R = np.column_stack([x, y, z])
    return tuple(float(v) for v in pos), quat_from_matrix(R)


def build_schunk() -> HandModel:
    joints = (
        JointSpec("root_adduction", 0.0, 1.571),
        JointSpec("thumb_proximal", -1.571, 1.571),
        JointSpec("thumb_distal", -0.5, 1.4),
        JointSpec("finger1_proximal", -1.571, 1.571),
        JointSpec("finger1_distal", -0.5, 1.4),
        JointSpec("finger2_proximal", -1.571, 1.571),
        JointSpec("finger2_distal", -0.5, 1.4),
    )
    tp, tq = finger_base((-0.044, 0.0, 0.0), (1.0, 0.0, 0.0))
    f1p, f1q = finger_base((0.022, 0.038, 0.0), (-1.0, 0.0, 0.0))
    f2p, f2q = finger_base((0.022, -0.038, 0.0), (-1.0, 0.0, 0.0))
    fingers = (
        FingerChain(
            "thumb", tp, tq,
            (LinkSpec(0.0865, 1, (0.0, -1.0, 0.0)), LinkSpec(0.0685, 2, (0.0, 1.0, 0.0))),
        ),
        FingerChain(
            "finger1", f1p, f1q,
            (
                LinkSpec(0.03, 0, (1.0, 0.0, 0.0)),
                LinkSpec(0.0865, 3, (0.0, -1.0, 0.0)),
                LinkSpec(0.0685, 4, (0.0, 1.0, 0.0)),
            ),
        ),
        FingerChain(
            "finger2", f2p, f2q,
            (
                LinkSpec(0.03, 0, (-1.0, 0.0, 0.0)),
                LinkSpec(0.0865, 5, (0.0, -1.0, 0.0)),
                LinkSpec(0.0685, 6, (0.0, 1.0, 0.0)),
            ),
        ),
    )
    return HandModel("schunk-sdh", 7, 1.5, joints, fingers)


def build_human() -> HandModel:
    joints = (
        JointSpec("thumb_adduction", -0.5, 1.2),
        JointSpec("thumb_flexion", -0.2, 1.5),
        JointSpec("index_proximal", -1.571, 0.35),
        JointSpec("index_medial", -0.1, 1.75),
        JointSpec("index_distal", -0.1, 1.45),
        JointSpec("middle_proximal", -1.571, 0.35),
        JointSpec("middle_medial", -0.1, 1.75),
        JointSpec("index_middle_adduction", -0.35, 0.35),
    )
    tp, tq = finger_base((-0.035, 0.0, 0.0), (1.0, 0.0, 0.0))
    ip, iq = finger_base((0.035, 0.018, 0.0), (-1.0, 0.0, 0.0))
    mp, mq = finger_base((0.035, -0.018, 0.0), (-1.0, 0.0, 0.0))
    fingers = (
        FingerChain(
            "thumb", tp, tq,
            (LinkSpec(0.03, 0, (1.0, 0.0, 0.0)), LinkSpec(0.05, 1, (0.0, 1.0, 0.0))),
        ),
        FingerChain(
            "index", ip, iq,
            (
                LinkSpec(0.02, 7, (1.0, 0.0, 0.0)),
                LinkSpec(0.045, 2, (0.0, -1.0, 0.0)),
                LinkSpec(0.028, 3, (0.0, 1.0, 0.0)),
                LinkSpec(0.022, 4, (0.0, 1.0, 0.0)),
            ),
        ),
        FingerChain(
            "middle", mp, mq,
            (
                LinkSpec(0.02, 7, (-1.0, 0.0, 0.0)),
                LinkSpec(0.048, 5, (0.0, -1.0, 0.0)),
                LinkSpec(0.030, 6, (0.0, 1.0, 0.0)),
            ),
        ),
    )
    return HandModel("human-right", 8, 1.0, joints, fingers)


def build_gripper() -> HandModel:
    joints = (
        JointSpec("finger1_proximal", -1.571, 1.571),
        JointSpec("finger1_distal", -0.3, 1.45),
        JointSpec("finger2_proximal", -1.571, 1.571),
        JointSpec("finger2_distal", -0.3, 1.45),
    )
    f1p, f1q = finger_base((-0.045, 0.0, 0.0), (1.0, 0.0, 0.0))
    f2p, f2q = finger_base((0.045, 0.0, 0.0), (-1.0, 0.0, 0.0))
    fingers = (
        FingerChain(
            "finger1", f1p, f1q,
            (LinkSpec(0.08, 0, (0.0, -1.0, 0.0)), LinkSpec(0.06, 1, (0.0, 1.0, 0.0))),
        ),
        FingerChain(
            "finger2", f2p, f2q,
            (LinkSpec(0.08, 2, (0.0, -1.0, 0.0)), LinkSpec(0.06, 3, (0.0, 1.0, 0.0))),
        ),
    )
    return HandModel("gripper-2f", 4, 1.5, joints, fingers)


ASSIGNMENTS = {
    "schunk-sdh": MotionAssignment(
        spread={0: 1}, size={1: 1, 3: 1, 5: 1}, curl={2: 1, 4: 1, 6: 1}
    ),
    "human-right": MotionAssignment(
        spread={7: 1}, size={0: 1, 2: 1, 5: 1}, curl={1: 1, 3: 1, 4: 1, 6: 1}
    ),
    "gripper-2f": MotionAssignment(spread={}, size={0: 1, 2: 1}, curl={1: 1, 3: 1}),
}


def extrema_for(model: HandModel, assign: MotionAssignment) -> ExtremaPoses:
    origin = 0.5 * (model.joint_min + model.joint_max)

    def axis_poses(joints):
        if not joints:
            return ()
        lo = origin.copy()
        hi = origin.copy()
        for j in joints:
            lo[j] = model.joint_min[j]
            hi[j] = model.joint_max[j]
        return (lo, hi)

    return ExtremaPoses(
        spread=axis_poses(sorted(assign.spread)),
        size=axis_poses(sorted(assign.size)),
        curl=axis_poses(sorted(assign.curl)),
    )


def write_trajectories(master_map):
    t_step = 0.05
    n = 200

    def sweep(axis, amplitude, path):
        steps = []
        for i in range(n):
            t = i * t_step
            psi = [0.0, 0.0, 0.0]
            psi[axis] = amplitude * math.sin(2 * math.pi * t / 10.0)
            q = project_from_subspace(master_map, psi)
            steps.append((t, q))
        storage.save_trajectory(DATA / path, steps)

    sweep(1, 0.45, "traj-slow-open-close.jsonl")
    sweep(0, 0.45, "traj-slow-spread.jsonl")
    sweep(2, 0.45, "traj-slow-curl.jsonl")


def session_payload(kind, master_map, slave_map, master_model, slave_model,
                    corr=None, tip=None):
    return {
        "schema": storage.SESSION_SCHEMA,
        "mapping_kind": kind,
        "clamp": True,
        "master_mapping": master_map,
        "slave_mapping": slave_map,
        "master_model": master_model,
        "slave_model": slave_model,
        "correspondence": corr,
        "fingertip_config": tip,
    }


def main():
    DATA.mkdir(parents=True, exist_ok=True)
    models = {m.hand_id: m for m in (build_human(), build_schunk(), build_gripper())}
    files = {"human-right": "human", "schunk-sdh": "schunk", "gripper-2f": "gripper2f"}
    for hand_id, model in models.items():
        bad = validate_model(model)
        if bad:
            raise SystemExit(f"{hand_id}: " + "; ".join(bad))
        stem = files[hand_id]
        storage.save_hand_model(DATA / f"{stem}.json", model)
        assign = ASSIGNMENTS[hand_id]
        storage.save_assignment(DATA / f"{stem}-motions.json", hand_id, assign)
        extrema = extrema_for(model, assign)
        storage.save_extrema(DATA / f"{stem}-extrema.json", extrema)
        origin = 0.5 * (model.joint_min + model.joint_max)
        mapping = build_empirical_mapping(model, origin, assign, extrema)
        storage.save_mapping(DATA / f"{stem}-empirical-map.json", mapping)

    storage.save_correspondence(
        DATA / "human-schunk-joints.json",
        JointCorrespondence(
            "human-right", "schunk-sdh",
            ((7, 0), (0, 1), (1, 2), (2, 3), (3, 4), (5, 5), (6, 6)),
        ),
    )
    storage.save_correspondence(
        DATA / "human-gripper2f-joints.json",
        JointCorrespondence("human-right", "gripper-2f", ((0, 0), (4, 1), (5, 2), (6, 3))),
    )
    storage.save_fingertip_config(
        DATA / "human-schunk-fingertip.json",
        FingertipConfig(
            "human-right", "schunk-sdh",
            (("thumb", "thumb"), ("index", "finger1"), ("middle", "finger2")),
            scale=1.5, ik=IkParams(),
        ),
    )
    storage.save_fingertip_config(
        DATA / "human-gripper2f-fingertip.json",
        FingertipConfig(
            "human-right", "gripper-2f",
            (("thumb", "finger1"), ("index", "finger2")),
            scale=1.5, ik=IkParams(),
        ),
    )

    human_map = storage.load_mapping(DATA / "human-empirical-map.json")
    write_trajectories(human_map)

    storage.write_document(
        DATA / "session-human-schunk.json",
        session_payload(
            "subspace",
            "human-empirical-map.json", "schunk-empirical-map.json",
            "human.json", "schunk.json",
            "human-schunk-joints.json", "human-schunk-fingertip.json",
        ),
    )
    storage.write_document(
        DATA / "session-human-gripper2f.json",
        session_payload(
            "subspace",
            "human-empirical-map.json", "gripper2f-empirical-map.json",
            "human.json", "gripper2f.json",
            "human-gripper2f-joints.json", "human-gripper2f-fingertip.json",
        ),
    )
    print(f"wrote data files to {DATA}")


if __name__ == "__main__":
    main()

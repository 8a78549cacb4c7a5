"""Command-line interface.

Subcommands cover the full pipeline: validate files, build empirical
mappings, synthesize and parse grasp datasets, fit the subspace, build
algorithmic mappings, batch-map pose files, replay trajectories, and run the
streaming service. Exit codes: 0 success, 2 validation/usage failure, 1
internal error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import fitting, kernels, storage
from .empirical import build_empirical_mapping
from .hands import clamp_to_limits, validate_model
from .objects import canonical_object_set
from .sampling import GraspDataset, parse_dataset, sample_grasps
from .service import load_session_config, replay_eval, serve
from .storage import SchemaError
from .subspace import teleop_map, validate_mapping


def _parse_pose(text: str) -> np.ndarray:
    try:
        return np.asarray([float(v) for v in text.split(",")], dtype=float)
    except ValueError as e:
        raise SchemaError(f"bad pose list {text!r}: {e}") from e


def cmd_validate(args) -> int:
    path = Path(args.file)
    loaders = {
        storage.HAND_SCHEMA: storage.load_hand_model,
        storage.MAPPING_SCHEMA: storage.load_mapping,
        storage.ASSIGNMENT_SCHEMA: storage.load_assignment,
        storage.EXTREMA_SCHEMA: storage.load_extrema,
        storage.CORRESPONDENCE_SCHEMA: storage.load_correspondence,
        storage.FINGERTIP_SCHEMA: storage.load_fingertip_config,
        storage.REPORT_SCHEMA: storage.load_report,
        storage.SESSION_SCHEMA: load_session_config,
        storage.DATASET_SCHEMA: storage.load_dataset,
    }
    first = path.read_text(encoding="utf-8").lstrip()
    try:
        head = json.loads(first.splitlines()[0]) if first.startswith("{") else None
    except json.JSONDecodeError:
        head = None
    schema = head.get("schema") if isinstance(head, dict) else None
    if schema not in loaders:
        print(f"{path}: unknown or missing schema {schema!r}", file=sys.stderr)
        return 2
    obj = loaders[schema](path)
    violations = []
    if schema == storage.HAND_SCHEMA:
        violations = validate_model(obj)
    elif schema == storage.MAPPING_SCHEMA:
        violations = validate_mapping(obj)
    for v in violations:
        print(f"{path}: {v}", file=sys.stderr)
    if violations:
        return 2
    print(f"{path}: valid {schema}")
    return 0


def cmd_build_empirical(args) -> int:
    model = storage.load_hand_model(args.model)
    bad = validate_model(model)
    if bad:
        raise SchemaError(f"{args.model}: " + "; ".join(bad))
    hand_id, assign = storage.load_assignment(args.assign)
    if hand_id != model.hand_id:
        raise SchemaError(
            f"assignment is for hand {hand_id!r}, model is {model.hand_id!r}"
        )
    extrema = storage.load_extrema(args.extrema)
    if args.origin is not None:
        origin = _parse_pose(args.origin)
    else:
        origin = 0.5 * (model.joint_min + model.joint_max)
    mapping = build_empirical_mapping(model, origin, assign, extrema)
    storage.save_mapping(args.out, mapping)
    print(f"wrote {args.out}")
    return 0


def cmd_gen_grasps(args) -> int:
    model = storage.load_hand_model(args.model)
    objects = canonical_object_set(model.scale)
    if args.objects != "all":
        wanted = {int(v) for v in args.objects.split(",")}
        objects = [o for o in objects if o.id in wanted]
        if not objects:
            raise SchemaError(f"no objects selected by {args.objects!r}")
    grasps = {}
    provenance = {
        "seed": args.seed,
        "budget": args.budget,
        "max_grasps": args.max_grasps,
        "mu": args.mu,
        "object_scale": model.scale,
    }
    for obj in objects:
        found, diag = sample_grasps(
            model,
            obj,
            args.budget,
            args.seed,
            workers=args.workers,
            max_grasps=args.max_grasps,
            mu=args.mu,
        )
        grasps[obj.id] = found
        print(
            f"object {obj.id}: {len(found)} grasps "
            f"({diag['candidates_evaluated']} candidates, "
            f"stopped by {diag['stopped_by']})",
            file=sys.stderr,
        )
        if not found:
            print(f"object {obj.id} failures: {diag['failures']}", file=sys.stderr)
    dataset = GraspDataset(
        hand_id=model.hand_id,
        dof=model.dof,
        grasps=grasps,
        xi_final=None,
        provenance=provenance,
    )
    storage.save_dataset(args.out, dataset)
    print(f"wrote {args.out}")
    return 0


def cmd_parse_grasps(args) -> int:
    datasets = [storage.load_dataset(p) for p in args.inputs]
    merged = storage.merge_datasets(datasets)
    parsed = parse_dataset(merged)
    storage.save_dataset(args.out, parsed)
    counts = {oid: len(parsed.grasps[oid]) for oid in parsed.object_ids()}
    print(f"xi_final={parsed.xi_final} counts={counts}", file=sys.stderr)
    print(f"wrote {args.out}")
    return 0


def _fit_config(args, dataset) -> fitting.FitConfig:
    return fitting.FitConfig(
        M=args.M,
        xi=args.xi,
        seed=args.seed,
        delta_combo_cap=args.delta_combo_cap,
        origin_object=args.origin_object,
        relocation_object=args.relocation_object,
        workers=args.workers,
    )


def cmd_fit_ransac(args) -> int:
    dataset = storage.load_dataset(args.dataset)
    cfg = _fit_config(args, dataset)
    start = time.perf_counter()
    hyp, score, info = fitting.fit_subspace(dataset, cfg)
    elapsed = time.perf_counter() - start
    report = {
        "cfg": {
            "M": cfg.M,
            "xi": info["xi"],
            "seed": cfg.seed,
            "delta_combo_cap": cfg.delta_combo_cap,
            "origin_object": cfg.origin_object,
            "relocation_object": cfg.relocation_object,
        },
        "best_score": {"t1": score.t1, "t2": score.t2, "t3": score.t3, "t4": score.t4},
        "per_object_inliers": info["per_object_inliers"],
        "runtime_seconds": elapsed if args.timing else None,
    }
    storage.save_report(args.report, report)
    print(f"wrote {args.report}")
    return 0


def cmd_build_mapping(args) -> int:
    model = storage.load_hand_model(args.model)
    dataset = storage.load_dataset(args.dataset)
    if dataset.hand_id != model.hand_id:
        raise SchemaError(
            f"dataset is for hand {dataset.hand_id!r}, model is {model.hand_id!r}"
        )
    cfg = _fit_config(args, dataset)
    hyp, score, info = fitting.fit_subspace(dataset, cfg)
    calibration = _parse_pose(args.calibration_pose) if args.calibration_pose else None
    hyp = fitting.relocate_origin(
        hyp, dataset, calibration, relocation_object=cfg.relocation_object
    )
    extrema = None
    if args.extrema:
        extrema = storage.load_extrema(args.extrema).pooled()
    mapping = fitting.build_algorithmic_mapping(
        model,
        hyp,
        cfg,
        extrema_poses=extrema,
        provenance_extra={"dataset_digest": storage.file_digest(args.dataset)},
    )
    storage.save_mapping(args.out, mapping)
    print(f"wrote {args.out}")
    return 0


def cmd_map(args) -> int:
    master = storage.load_mapping(args.master)
    slave = storage.load_mapping(args.slave)
    slave_model = storage.load_hand_model(args.slave_model) if args.slave_model else None
    steps = storage.load_trajectory(args.inp)
    out_lines = []
    for t, q in steps:
        q_s, psi = teleop_map(master, slave, q)
        if slave_model is not None:
            q_s, _ = clamp_to_limits(slave_model, q_s)
        out_lines.append(
            storage.dumps_canonical(
                {"t": t, "q": [float(v) for v in q_s], "psi": [float(v) for v in psi]}
            )
        )
    text = "\n".join(out_lines) + ("\n" if out_lines else "")
    if args.out == "-":
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote {args.out}")
    return 0


def cmd_serve(args) -> int:
    config = load_session_config(args.config)
    serve(
        config,
        host=args.host,
        port=args.port,
        http_port=args.http_port,
        static_dir=args.static_dir,
    )
    return 0


def cmd_replay_eval(args) -> int:
    config = load_session_config(args.config)
    trajectory = storage.load_trajectory(args.traj)
    report = replay_eval(trajectory, config)
    if not args.full:
        report = {k: v for k, v in report.items() if k not in ("slave_path", "psi_path")}
    text = storage.dumps_canonical(report) + "\n"
    if args.out == "-":
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="teleopspace", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", help="validate any document against its schema")
    v.add_argument("--file", required=True)
    v.set_defaults(fn=cmd_validate)

    be = sub.add_parser("build-empirical", help="mapping from a motion assignment")
    be.add_argument("--model", required=True)
    be.add_argument("--assign", required=True)
    be.add_argument("--extrema", required=True)
    be.add_argument("--origin", help="comma-separated origin pose; default: limit midpoints")
    be.add_argument("-o", "--out", required=True)
    be.set_defaults(fn=cmd_build_empirical)

    gg = sub.add_parser("gen-grasps", help="synthesize a raw grasp dataset")
    gg.add_argument("--model", required=True)
    gg.add_argument("--objects", default="all", help="comma-separated object ids or 'all'")
    gg.add_argument("--budget", type=int, default=200_000)
    gg.add_argument("--seed", type=int, default=0)
    gg.add_argument("--workers", type=int, default=1)
    gg.add_argument("--max-grasps", type=int, default=1000)
    gg.add_argument("--mu", type=float, default=0.5)
    gg.add_argument("-o", "--out", required=True)
    gg.set_defaults(fn=cmd_gen_grasps)

    pg = sub.add_parser("parse-grasps", help="thin raw datasets by threshold escalation")
    pg.add_argument("--in", dest="inputs", action="append", required=True)
    pg.add_argument("-o", "--out", required=True)
    pg.set_defaults(fn=cmd_parse_grasps)

    def fit_args(sp):
        sp.add_argument("--M", type=int, default=20_000)
        sp.add_argument("--xi", type=float, default=None)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--delta-combo-cap", type=int, default=4096)
        sp.add_argument("--origin-object", type=int, default=8)
        sp.add_argument("--relocation-object", type=int, default=1)
        sp.add_argument("--workers", type=int, default=1)

    fr = sub.add_parser("fit-ransac", help="fit the subspace and write a report")
    fr.add_argument("--dataset", required=True)
    fit_args(fr)
    fr.add_argument("--timing", action="store_true", help="include wall-clock runtime")
    fr.add_argument("--report", required=True)
    fr.set_defaults(fn=cmd_fit_ransac)

    bm = sub.add_parser("build-mapping", help="fit, relocate, scale: full algorithmic mapping")
    bm.add_argument("--model", required=True)
    bm.add_argument("--dataset", required=True)
    fit_args(bm)
    bm.add_argument("--calibration-pose", help="comma-separated origin pose (human-style)")
    bm.add_argument("--extrema", help="extrema-poses file for scaling (human-style)")
    bm.add_argument("-o", "--out", required=True)
    bm.set_defaults(fn=cmd_build_mapping)

    mp = sub.add_parser("map", help="batch-map a master trajectory file")
    mp.add_argument("--master", required=True)
    mp.add_argument("--slave", required=True)
    mp.add_argument("--in", dest="inp", required=True)
    mp.add_argument("--slave-model", help="clamp outputs to this model's limits")
    mp.add_argument("-o", "--out", default="-")
    mp.set_defaults(fn=cmd_map)

    sv = sub.add_parser("serve", help="run the streaming service")
    sv.add_argument("--config", required=True)
    sv.add_argument("--host", default="127.0.0.1")
    sv.add_argument("--port", type=int, default=7461)
    sv.add_argument("--http-port", type=int, default=None)
    sv.add_argument("--static-dir", default=None)
    sv.set_defaults(fn=cmd_serve)

    re = sub.add_parser("replay-eval", help="run a trajectory offline and report metrics")
    re.add_argument("--config", required=True)
    re.add_argument("--traj", required=True)
    re.add_argument("--full", action="store_true", help="include full slave/psi paths")
    re.add_argument("-o", "--out", default="-")
    re.set_defaults(fn=cmd_replay_eval)

    return p


def main(argv=None) -> int:
    logging.basicConfig(
        level=getattr(logging, os.environ.get("TELEOP_LOG", "WARNING").upper(), logging.WARNING)
    )
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.fn(args)
    except (SchemaError, ValueError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except Exception as e:  # internal failure
        print(f"internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

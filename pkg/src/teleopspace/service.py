"""Streaming teleoperation sessions.

One session holds immutable mappings/models plus the currently selected
mapping kind, and turns each incoming master_pose into exactly one slave_pose
(clamped by default, subspace point attached when applicable). Malformed
input produces an error message and the session continues. The same session
logic backs a newline-delimited-JSON TCP endpoint, an HTTP bridge usable from
a browser, and offline trajectory replay.
"""

from __future__ import annotations

import json
import logging
import os
import socket
import socketserver
import threading
import time
import uuid
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import numpy as np

from .baselines import FingertipConfig, JointCorrespondence, fingertip_map, joint_map
from .hands import HandModel, clamp_to_limits, fk_segments
from .storage import (
    SESSION_SCHEMA,
    SchemaError,
    _expect_keys,
    dumps_canonical,
    load_correspondence,
    load_fingertip_config,
    load_hand_model,
    load_mapping,
    read_document,
)
from .subspace import TeleopMapping, project_from_subspace, teleop_map

log = logging.getLogger("teleopspace.service")

MAPPING_KINDS = ("subspace", "joint", "fingertip")


@dataclass
class SessionConfig:
    mapping_kind: str = "subspace"
    clamp: bool = True
    master_mapping: TeleopMapping | None = None
    slave_mapping: TeleopMapping | None = None
    master_model: HandModel | None = None
    slave_model: HandModel | None = None
    correspondence: JointCorrespondence | None = None
    fingertip: FingertipConfig | None = None

    def validate(self) -> list[str]:
        bad = []
        if self.mapping_kind not in MAPPING_KINDS:
            bad.append(f"mapping_kind must be one of {MAPPING_KINDS}")
        if self.slave_model is None:
            bad.append("slave_model is required")
        if self.mapping_kind == "subspace":
            if self.master_mapping is None or self.slave_mapping is None:
                bad.append("subspace mapping needs master_mapping and slave_mapping")
            elif self.slave_model is not None and self.slave_mapping.dof != self.slave_model.dof:
                bad.append("slave_mapping dof disagrees with slave_model")
        if self.mapping_kind == "joint" and self.correspondence is None:
            bad.append("joint mapping needs a correspondence table")
        if self.mapping_kind == "fingertip":
            if self.fingertip is None or self.master_model is None:
                bad.append("fingertip mapping needs fingertip config and master_model")
        return bad

    def master_dof(self) -> int:
        if self.master_mapping is not None:
            return self.master_mapping.dof
        if self.master_model is not None:
            return self.master_model.dof
        raise ValueError("session has no master hand description")


def load_session_config(path) -> SessionConfig:
    d = read_document(path, SESSION_SCHEMA)
    _expect_keys(
        d,
        str(path),
        ("schema", "mapping_kind", "clamp", "master_mapping", "slave_mapping",
         "master_model", "slave_model", "correspondence", "fingertip_config"),
    )
    base = Path(path).parent

    def resolve(name, loader):
        rel = d.get(name)
        if rel is None:
            return None
        p = Path(rel)
        return loader(p if p.is_absolute() else base / p)

    cfg = SessionConfig(
        mapping_kind=d["mapping_kind"],
        clamp=bool(d["clamp"]),
        master_mapping=resolve("master_mapping", load_mapping),
        slave_mapping=resolve("slave_mapping", load_mapping),
        master_model=resolve("master_model", load_hand_model),
        slave_model=resolve("slave_model", load_hand_model),
        correspondence=resolve("correspondence", load_correspondence),
        fingertip=resolve("fingertip_config", load_fingertip_config),
    )
    bad = cfg.validate()
    if bad:
        raise SchemaError(f"{path}: " + "; ".join(bad))
    return cfg


class TeleopSession:
    """Order-preserving message processor for one connection."""

    def __init__(self, config: SessionConfig):
        bad = config.validate()
        if bad:
            raise ValueError("; ".join(bad))
        self.config = config
        self.kind = config.mapping_kind
        self._lock = threading.Lock()

    # -- mapping application -------------------------------------------------

    def _apply(self, q_master: np.ndarray):
        cfg = self.config
        psi = None
        if self.kind == "subspace":
            q_slave, psi = teleop_map(cfg.master_mapping, cfg.slave_mapping, q_master)
        elif self.kind == "joint":
            origin = None
            if cfg.slave_mapping is not None:
                origin = cfg.slave_mapping.origin
            q_slave, _ = joint_map(cfg.correspondence, q_master, cfg.slave_model, origin)
        else:
            q_slave, _ = fingertip_map(cfg.fingertip, cfg.master_model, q_master, cfg.slave_model)
        if cfg.clamp:
            q_slave, flags = clamp_to_limits(cfg.slave_model, q_slave)
        else:
            flags = np.zeros(len(q_slave), dtype=bool)
        return q_slave, psi, flags

    def process(self, msg: dict) -> list[dict]:
        """One incoming message to its replies; never raises on bad input."""
        with self._lock:
            return self._process_locked(msg)

    def _process_locked(self, msg: dict) -> list[dict]:
        if not isinstance(msg, dict) or "type" not in msg:
            return [{"type": "error", "error": "message must be an object with a 'type'"}]
        t = msg.get("t")
        kind = msg["type"]
        if kind == "master_pose":
            q = msg.get("q")
            expected = self.config.master_dof()
            if not isinstance(q, list) or len(q) != expected:
                return [
                    {
                        "type": "error",
                        "t": t,
                        "error": f"master_pose q must have {expected} entries",
                    }
                ]
            arr = np.asarray(q, dtype=float)
            if not np.isfinite(arr).all():
                return [{"type": "error", "t": t, "error": "master_pose q must be finite"}]
            try:
                q_slave, psi, flags = self._apply(arr)
            except Exception as e:  # mapping-level failure: report, keep session
                log.warning("mapping failed: %s", e)
                return [{"type": "error", "t": t, "error": str(e)}]
            return [
                {
                    "type": "slave_pose",
                    "t": t,
                    "q": [float(v) for v in q_slave],
                    "psi": None if psi is None else [float(v) for v in psi],
                    "clamped": [bool(v) for v in flags],
                }
            ]
        if kind == "set_mapping":
            ref = msg.get("mapping_ref")
            if ref not in MAPPING_KINDS:
                return [{"type": "error", "t": t, "error": f"unknown mapping_ref {ref!r}"}]
            trial = SessionConfig(**{**self.config.__dict__, "mapping_kind": ref})
            bad = trial.validate()
            if bad:
                return [{"type": "error", "t": t, "error": "; ".join(bad)}]
            self.kind = ref
            return [{"type": "info", "t": t, "info": "mapping_set", "mapping_ref": ref}]
        if kind == "info":
            return self._info_request(msg)
        if kind in ("slave_pose", "error"):
            return []  # echoes from peers are ignored
        return [{"type": "error", "t": t, "error": f"unknown message type {kind!r}"}]

    def _info_request(self, msg: dict) -> list[dict]:
        t = msg.get("t")
        want = msg.get("info")
        if want == "fk_request":
            hand = msg.get("hand", "master")
            model = self.config.master_model if hand == "master" else self.config.slave_model
            if model is None:
                return [{"type": "error", "t": t, "error": f"no {hand} model configured"}]
            q = msg.get("q")
            if not isinstance(q, list) or len(q) != model.dof:
                return [{"type": "error", "t": t, "error": f"fk q must have {model.dof} entries"}]
            segs = fk_segments(model, np.asarray(q, dtype=float))
            return [
                {
                    "type": "info",
                    "t": t,
                    "info": "fk",
                    "hand": hand,
                    "fingers": [
                        [[list(map(float, a)), list(map(float, b))] for a, b in finger]
                        for finger in segs
                    ],
                }
            ]
        if want == "mapping_request":
            m = self.config.master_mapping
            if m is None:
                return [{"type": "error", "t": t, "error": "no master mapping configured"}]
            return [
                {
                    "type": "info",
                    "t": t,
                    "info": "mapping",
                    "hand_id": m.hand_id,
                    "dof": m.dof,
                    "origin": [float(v) for v in m.origin],
                    "alpha": [float(v) for v in m.A[:, 0]],
                    "sigma": [float(v) for v in m.A[:, 1]],
                    "epsilon": [float(v) for v in m.A[:, 2]],
                    "delta": [float(v) for v in m.delta],
                    "delta_star": [float(v) for v in m.delta_star],
                }
            ]
        if want == "session_request":
            cfg = self.config
            master_model = cfg.master_model
            slave_model = cfg.slave_model
            return [
                {
                    "type": "info",
                    "t": t,
                    "info": "session",
                    "mapping_kind": self.kind,
                    "master_dof": cfg.master_dof(),
                    "slave_dof": slave_model.dof if slave_model else None,
                    "master_limits": _limits(master_model),
                    "slave_limits": _limits(slave_model),
                }
            ]
        return [{"type": "error", "t": t, "error": f"unknown info request {want!r}"}]


def _limits(model: HandModel | None):
    if model is None:
        return None
    return {
        "min": [float(v) for v in model.joint_min],
        "max": [float(v) for v in model.joint_max],
        "names": [j.name for j in model.joints],
    }


def process_line(session: TeleopSession, line: str) -> list[str]:
    """Parse one NDJSON line and serialize the replies canonically."""
    try:
        msg = json.loads(line)
    except json.JSONDecodeError as e:
        return [dumps_canonical({"type": "error", "error": f"bad JSON: {e.msg}"})]
    return [dumps_canonical(reply) for reply in session.process(msg)]


# --- offline replay --------------------------------------------------------


def replay_eval(trajectory, config: SessionConfig) -> dict:
    """Run a recorded master trajectory through a fresh session.

    Returns the slave joint path, subspace path, clamp counts, the largest
    per-joint step between consecutive outputs, and wall-clock latency
    percentiles per message.
    """
    session = TeleopSession(config)
    slave_path = []
    psi_path = []
    clamp_count = 0
    latencies = []
    errors = 0
    for t, q in trajectory:
        start = time.perf_counter()
        replies = session.process({"type": "master_pose", "t": t, "q": [float(v) for v in q]})
        latencies.append(time.perf_counter() - start)
        for r in replies:
            if r["type"] == "slave_pose":
                slave_path.append(r["q"])
                psi_path.append(r["psi"])
                clamp_count += sum(1 for v in r["clamped"] if v)
            else:
                errors += 1
    max_step = 0.0
    for a, b in zip(slave_path, slave_path[1:]):
        step = max(abs(x - y) for x, y in zip(a, b))
        max_step = max(max_step, step)
    lat = sorted(latencies)

    def pct(p):
        if not lat:
            return None
        return lat[min(len(lat) - 1, int(p * len(lat)))] * 1000.0

    return {
        "steps": len(slave_path),
        "errors": errors,
        "clamp_count": clamp_count,
        "max_joint_step": max_step,
        "slave_path": slave_path,
        "psi_path": psi_path,
        "latency_ms": {"p50": pct(0.50), "p90": pct(0.90), "p99": pct(0.99)},
    }


# --- TCP endpoint ----------------------------------------------------------


class _TCPHandler(socketserver.StreamRequestHandler):
    def handle(self):
        session = TeleopSession(self.server.session_config)  # type: ignore[attr-defined]
        for raw in self.rfile:
            line = raw.decode("utf-8", errors="replace").strip()
            if not line:
                continue
            for reply in process_line(session, line):
                self.wfile.write(reply.encode("utf-8") + b"\n")
            self.wfile.flush()


class TeleopTCPServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, address, config: SessionConfig):
        super().__init__(address, _TCPHandler)
        self.session_config = config


# --- HTTP bridge (browser-compatible message channel) ----------------------


class _Bridge:
    def __init__(self, config: SessionConfig):
        self.config = config
        self.sessions: dict[str, TeleopSession] = {}
        self.lock = threading.Lock()

    def create(self) -> str:
        sid = uuid.uuid4().hex
        with self.lock:
            self.sessions[sid] = TeleopSession(self.config)
        return sid

    def get(self, sid: str) -> TeleopSession | None:
        with self.lock:
            return self.sessions.get(sid)

    def drop(self, sid: str) -> bool:
        with self.lock:
            return self.sessions.pop(sid, None) is not None


class _HTTPHandler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"

    def _send(self, code: int, body: bytes, content_type="application/json"):
        self.send_response(code)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, DELETE, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, fmt, *args):
        log.debug("http: " + fmt, *args)

    def do_OPTIONS(self):
        self._send(204, b"")

    def do_GET(self):
        if self.path == "/health":
            self._send(200, b'{"ok":true}')
            return
        static = getattr(self.server, "static_dir", None)
        if static is not None:
            rel = self.path.lstrip("/") or "index.html"
            target = (Path(static) / rel).resolve()
            if str(target).startswith(str(Path(static).resolve())) and target.is_file():
                ctype = {
                    ".html": "text/html",
                    ".js": "text/javascript",
                    ".css": "text/css",
                    ".json": "application/json",
                }.get(target.suffix, "application/octet-stream")
                self._send(200, target.read_bytes(), ctype)
                return
        self._send(404, b'{"error":"not found"}')

    def do_POST(self):
        bridge: _Bridge = self.server.bridge  # type: ignore[attr-defined]
        length = int(self.headers.get("Content-Length") or 0)
        body = self.rfile.read(length).decode("utf-8", errors="replace")
        if self.path == "/session":
            sid = bridge.create()
            self._send(200, dumps_canonical({"session_id": sid}).encode())
            return
        if self.path.startswith("/session/"):
            sid = self.path.split("/")[2]
            session = bridge.get(sid)
            if session is None:
                self._send(404, b'{"error":"no such session"}')
                return
            replies = []
            for line in body.splitlines():
                if line.strip():
                    replies.extend(process_line(session, line))
            self._send(200, ("\n".join(replies) + ("\n" if replies else "")).encode())
            return
        self._send(404, b'{"error":"not found"}')

    def do_DELETE(self):
        bridge: _Bridge = self.server.bridge  # type: ignore[attr-defined]
        if self.path.startswith("/session/"):
            sid = self.path.split("/")[2]
            ok = bridge.drop(sid)
            self._send(200 if ok else 404, dumps_canonical({"removed": ok}).encode())
            return
        self._send(404, b'{"error":"not found"}')


class TeleopHTTPServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, address, config: SessionConfig, static_dir=None):
        super().__init__(address, _HTTPHandler)
        self.bridge = _Bridge(config)
        self.static_dir = static_dir


def serve(
    config: SessionConfig,
    host: str = "127.0.0.1",
    port: int = 7461,
    http_port: int | None = None,
    static_dir=None,
    ready_event: threading.Event | None = None,
):
    """Run the TCP endpoint (and optional HTTP bridge) until interrupted."""
    level = os.environ.get("TELEOP_LOG", "INFO").upper()
    logging.basicConfig(level=getattr(logging, level, logging.INFO))
    tcp = TeleopTCPServer((host, port), config)
    servers = [tcp]
    if http_port is not None:
        servers.append(TeleopHTTPServer((host, http_port), config, static_dir))
    threads = []
    for s in servers[1:]:
        th = threading.Thread(target=s.serve_forever, daemon=True)
        th.start()
        threads.append(th)
    log.info("serving NDJSON on %s:%d%s", host, port,
             f", HTTP bridge on :{http_port}" if http_port else "")
    if ready_event is not None:
        ready_event.set()
    try:
        tcp.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        for s in servers:
            s.shutdown()
            s.server_close()


def request_once(host: str, port: int, lines: list[str], timeout=10.0) -> list[str]:
    """Send NDJSON lines over one TCP connection; collect one reply per line."""
    out = []
    with socket.create_connection((host, port), timeout=timeout) as sock:
        f = sock.makefile("rwb")
        for line in lines:
            f.write(line.encode("utf-8") + b"\n")
            f.flush()
            reply = f.readline()
            if not reply:
                break
            out.append(reply.decode("utf-8").strip())
    return out

"""Metrics ingestion service: receives MetricPackets from clients over a
persistent channel, keeps live per-student state for the teacher
dashboard, persists focus logs durably, and serves calibration plans and
session reports.

Privacy boundary: clients compute features locally; this service only
ever sees MetricPackets (emotion label + anomaly level + timestamp),
never landmark coordinates or images.

Authorization is a minimal static-token role model: each token maps to a
student (one user_id) or a teacher (one class_id). Students read only
their own logs; teachers read their class.
"""

from __future__ import annotations

import json
import os
import threading
import time
from collections import deque
from dataclasses import dataclass, field

from fastapi import Depends, FastAPI, Header, HTTPException, WebSocket
from fastapi.websockets import WebSocketDisconnect

from . import calibration as calib
from .bundle import load_bundle, save_bundle
from .errors import FocusWatchError
from .streams import meta_from_dict, meta_to_dict, packet_from_dict, packet_to_dict
from .types import MetricPacket, SessionMeta

REORDER_BUFFER_MS = 5000
STALE_AFTER_S = 5.0
ROLLING_WINDOW_MS = 60000


@dataclass
class StudentLive:
    user_id: str
    latest: MetricPacket | None = None
    recent: deque = field(default_factory=deque)  # (timestamp_ms, anomaly_level)
    last_seen_wall: float = 0.0
    connected: bool = False
    packet_count: int = 0

    def rolling_mean(self) -> float | None:
        if not self.recent:
            return None
        latest = max(ts for ts, _ in self.recent)
        vals = [lv for ts, lv in self.recent if ts >= latest - ROLLING_WINDOW_MS]
        return sum(vals) / len(vals)

    def status(self, now_wall: float) -> str:
        if not self.connected:
            return "disconnected"
        if now_wall - self.last_seen_wall > STALE_AFTER_S:
            return "stale"
        return "connected"


@dataclass
class SessionState:
    meta: SessionMeta
    class_id: str
    max_ts: int = -1
    seen_ts: set = field(default_factory=set)


class FocusLogStore:
    """Append-only per-session packet persistence, durable across process
    restarts. One JSONL file per (user_id, session_id)."""

    def __init__(self, root: str):
        self.root = root
        os.makedirs(os.path.join(root, "logs"), exist_ok=True)
        os.makedirs(os.path.join(root, "sessions"), exist_ok=True)
        os.makedirs(os.path.join(root, "bundles"), exist_ok=True)

    def _log_path(self, user_id: str, session_id: str) -> str:
        return os.path.join(self.root, "logs", f"{user_id}__{session_id}.jsonl")

    def append_packet(self, packet: MetricPacket) -> None:
        with open(self._log_path(packet.user_id, packet.session_id), "a") as fh:
            fh.write(json.dumps(packet_to_dict(packet), sort_keys=True) + "\n")
            fh.flush()

    def read_packets(self, user_id: str, session_id: str) -> list[MetricPacket]:
        path = self._log_path(user_id, session_id)
        if not os.path.exists(path):
            return []
        with open(path) as fh:
            packets = [packet_from_dict(json.loads(line)) for line in fh if line.strip()]
        return sorted(packets, key=lambda p: p.timestamp_ms)

    def save_session(self, session: SessionState) -> None:
        path = os.path.join(self.root, "sessions", f"{session.meta.session_id}.json")
        with open(path, "w") as fh:
            json.dump(
                {"class_id": session.class_id, "meta": meta_to_dict(session.meta)}, fh
            )

    def load_sessions(self) -> dict[str, SessionState]:
        out = {}
        folder = os.path.join(self.root, "sessions")
        for name in os.listdir(folder):
            with open(os.path.join(folder, name)) as fh:
                d = json.load(fh)
            meta = meta_from_dict(d["meta"])
            state = SessionState(meta=meta, class_id=d["class_id"])
            for p in self.read_packets(meta.user_id, meta.session_id):
                state.seen_ts.add(p.timestamp_ms)
                state.max_ts = max(state.max_ts, p.timestamp_ms)
            out[meta.session_id] = state
        return out

    def bundle_path(self, user_id: str) -> str:
        return os.path.join(self.root, "bundles", f"{user_id}.json")


@dataclass(frozen=True)
class Principal:
    role: str  # "student" | "teacher"
    user_id: str | None
    class_id: str


def create_app(store_dir: str, tokens: dict[str, dict] | None = None) -> FastAPI:
    """tokens: token -> {"role": "student"|"teacher", "user_id": ...,
    "class_id": ...}. When omitted, tokens.json inside the store is used."""
    store = FocusLogStore(store_dir)
    if tokens is None:
        token_path = os.path.join(store_dir, "tokens.json")
        tokens = json.load(open(token_path)) if os.path.exists(token_path) else {}

    lock = threading.RLock()
    sessions: dict[str, SessionState] = store.load_sessions()
    classes: dict[str, dict[str, StudentLive]] = {}
    calibrations: dict[str, dict] = {}  # user_id -> {"plan": ..., "samples": [...]}

    for state in sessions.values():
        classes.setdefault(state.class_id, {})

    app = FastAPI(title="focuswatch metrics service")

    def principal(authorization: str = Header(default="")) -> Principal:
        token = authorization.removeprefix("Bearer ").strip()
        info = tokens.get(token)
        if info is None:
            raise HTTPException(status_code=401, detail="unknown token")
        return Principal(
            role=info["role"],
            user_id=info.get("user_id"),
            class_id=info["class_id"],
        )

    def student_live(class_id: str, user_id: str) -> StudentLive:
        cls = classes.setdefault(class_id, {})
        if user_id not in cls:
            cls[user_id] = StudentLive(user_id=user_id)
        return cls[user_id]

    def ingest(packet: MetricPacket) -> dict:
        """Returns an ack dict; raises HTTPException on rejection."""
        with lock:
            session = sessions.get(packet.session_id)
            if session is None:
                raise HTTPException(status_code=404, detail="unknown session")
            if packet.user_id != session.meta.user_id:
                raise HTTPException(status_code=403, detail="user/session mismatch")
            if packet.timestamp_ms in session.seen_ts:
                return {"ack": packet.timestamp_ms, "duplicate": True}
            if packet.timestamp_ms < session.max_ts - REORDER_BUFFER_MS:
                raise HTTPException(
                    status_code=409,
                    detail=f"packet older than the {REORDER_BUFFER_MS} ms reorder buffer",
                )
            session.seen_ts.add(packet.timestamp_ms)
            session.max_ts = max(session.max_ts, packet.timestamp_ms)
            store.append_packet(packet)
            live = student_live(session.class_id, packet.user_id)
            live.latest = packet
            live.recent.append((packet.timestamp_ms, packet.anomaly_level))
            while live.recent and live.recent[0][0] < session.max_ts - ROLLING_WINDOW_MS:
                live.recent.popleft()
            live.last_seen_wall = time.monotonic()
            live.connected = True
            live.packet_count += 1
            return {"ack": packet.timestamp_ms, "duplicate": False}

    # -- session registration ----------------------------------------------

    @app.post("/sessions")
    def register_session(body: dict, who: Principal = Depends(principal)):
        try:
            meta = meta_from_dict(body["meta"])
        except (KeyError, ValueError, FocusWatchError) as exc:
            raise HTTPException(status_code=422, detail=f"bad session meta: {exc}")
        if who.role == "student" and who.user_id != meta.user_id:
            raise HTTPException(status_code=403, detail="cannot register for another user")
        with lock:
            state = SessionState(meta=meta, class_id=who.class_id)
            sessions[meta.session_id] = state
            store.save_session(state)
            student_live(who.class_id, meta.user_id)
        return {"registered": meta.session_id}

    # -- packet ingestion (REST fallback + websocket channel) ---------------

    @app.post("/packets")
    def ingest_packet(body: dict, who: Principal = Depends(principal)):
        try:
            packet = packet_from_dict(body)
        except FocusWatchError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        if who.role == "student" and who.user_id != packet.user_id:
            raise HTTPException(status_code=403, detail="token does not own this user")
        return ingest(packet)

    @app.websocket("/stream")
    async def stream(ws: WebSocket):
        token = ws.query_params.get("token", "")
        info = tokens.get(token)
        if info is None:
            await ws.close(code=4401)
            return
        await ws.accept()
        user_id = info.get("user_id")
        try:
            while True:
                line = await ws.receive_text()
                try:
                    d = json.loads(line)
                    packet = packet_from_dict(d)
                except (json.JSONDecodeError, FocusWatchError) as exc:
                    await ws.send_text(json.dumps({"error": str(exc)}))
                    continue
                if info["role"] == "student" and packet.user_id != user_id:
                    await ws.send_text(json.dumps({"error": "token does not own this user"}))
                    continue
                try:
                    ack = ingest(packet)
                except HTTPException as exc:
                    await ws.send_text(json.dumps({"error": exc.detail}))
                    continue
                await ws.send_text(json.dumps(ack))
        except WebSocketDisconnect:
            if user_id is not None:
                with lock:
                    for cls in classes.values():
                        if user_id in cls:
                            cls[user_id].connected = False

    # -- dashboard ----------------------------------------------------------

    @app.get("/classes/{class_id}/dashboard")
    def dashboard_snapshot(class_id: str, who: Principal = Depends(principal)):
        if who.role != "teacher" or who.class_id != class_id:
            raise HTTPException(status_code=403, detail="teacher token for this class required")
        with lock:
            cls = classes.get(class_id)
            if cls is None:
                raise HTTPException(status_code=404, detail="unknown class")
            now = time.monotonic()
            students = []
            for live in cls.values():
                students.append(
                    {
                        "user_id": live.user_id,
                        "status": live.status(now),
                        "latest": None if live.latest is None else packet_to_dict(live.latest),
                        "rolling_mean_anomaly": live.rolling_mean(),
                        "packet_count": live.packet_count,
                    }
                )
        return {"class_id": class_id, "students": students}

    # -- focus logs ----------------------------------------------------------

    @app.get("/logs/{user_id}/{session_id}")
    def fetch_focus_log(user_id: str, session_id: str, who: Principal = Depends(principal)):
        with lock:
            session = sessions.get(session_id)
        if session is None or session.meta.user_id != user_id:
            raise HTTPException(status_code=404, detail="unknown session")
        if who.role == "student":
            if who.user_id != user_id:
                raise HTTPException(status_code=403, detail="students read only their own logs")
        elif who.class_id != session.class_id:
            raise HTTPException(status_code=403, detail="teacher of another class")
        packets = store.read_packets(user_id, session_id)
        return {
            "meta": meta_to_dict(session.meta),
            "packets": [packet_to_dict(p) for p in packets],
        }

    # -- calibration ---------------------------------------------------------

    @app.post("/calibration/{user_id}/start")
    def calibration_start(user_id: str, who: Principal = Depends(principal)):
        if who.role == "student" and who.user_id != user_id:
            raise HTTPException(status_code=403, detail="not your calibration")
        plan = calib.CalibrationPlan()
        with lock:
            calibrations[user_id] = {"plan": plan, "samples": []}
        return {
            "targets": list(plan.targets),
            "dwell_ms": plan.dwell_ms,
            "settle_ms": plan.settle_ms,
        }

    @app.post("/calibration/{user_id}/samples")
    def calibration_samples(user_id: str, body: dict, who: Principal = Depends(principal)):
        if who.role == "student" and who.user_id != user_id:
            raise HTTPException(status_code=403, detail="not your calibration")
        with lock:
            state = calibrations.get(user_id)
            if state is None:
                raise HTTPException(status_code=409, detail="calibration not started")
            for s in body.get("samples", []):
                gaze = s.get("gaze")
                state["samples"].append(
                    calib.GazeSample(
                        timestamp_ms=int(s["timestamp_ms"]),
                        target_index=int(s["target_index"]),
                        gaze=None if gaze is None else (float(gaze[0]), float(gaze[1])),
                    )
                )
            n = len(state["samples"])
        return {"received": n}

    @app.post("/calibration/{user_id}/finish")
    def calibration_finish(user_id: str, who: Principal = Depends(principal)):
        if who.role == "student" and who.user_id != user_id:
            raise HTTPException(status_code=403, detail="not your calibration")
        with lock:
            state = calibrations.pop(user_id, None)
        if state is None:
            raise HTTPException(status_code=409, detail="calibration not started")
        try:
            gaze_map = calib.run_calibration(state["plan"], state["samples"])
        except FocusWatchError as exc:
            raise HTTPException(status_code=422, detail=f"calibration failed: {exc}")
        path = store.bundle_path(user_id)
        if os.path.exists(path):
            # last-writer-wins, atomic replace
            bundle = load_bundle(path).with_gaze_map(gaze_map)
            tmp = path + ".tmp"
            save_bundle(bundle, tmp)
            os.replace(tmp, path)
        else:
            with open(path + ".gazemap", "w") as fh:
                json.dump(
                    {
                        "a": gaze_map.a.tolist(),
                        "b": gaze_map.b.tolist(),
                        "rms_residual": gaze_map.rms_residual,
                        "samples_used": gaze_map.samples_used,
                    },
                    fh,
                )
        return {
            "rms_residual": gaze_map.rms_residual,
            "samples_used": gaze_map.samples_used,
            "a": gaze_map.a.tolist(),
            "b": gaze_map.b.tolist(),
        }

    # -- model bundles & reports ---------------------------------------------

    @app.get("/bundles/{user_id}")
    def fetch_bundle(user_id: str, who: Principal = Depends(principal)):
        if who.role == "student" and who.user_id != user_id:
            raise HTTPException(status_code=403, detail="not your bundle")
        path = store.bundle_path(user_id)
        if not os.path.exists(path):
            raise HTTPException(status_code=404, detail="no bundle for user")
        return json.load(open(path))

    @app.get("/reports/{user_id}")
    def session_report_endpoint(user_id: str, who: Principal = Depends(principal)):
        from .stats import session_report
        from .types import SessionRecord

        if who.role == "student" and who.user_id != user_id:
            raise HTTPException(status_code=403, detail="not your report")
        with lock:
            owned = [s for s in sessions.values() if s.meta.user_id == user_id]
        by_kind: dict[str, list[SessionRecord]] = {}
        for s in owned:
            packets = store.read_packets(user_id, s.meta.session_id)
            if not packets:
                continue
            by_kind.setdefault(s.meta.session_kind, []).append(
                SessionRecord(meta=s.meta, packets=packets)
            )
        if not by_kind:
            raise HTTPException(status_code=404, detail="no scored sessions for user")
        try:
            return session_report(by_kind)
        except FocusWatchError as exc:
            raise HTTPException(status_code=422, detail=str(exc))

    app.state.store = store
    return app

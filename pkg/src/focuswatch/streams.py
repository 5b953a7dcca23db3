"""Line-delimited stream and record formats.

Landmark stream (.fwls): one JSON header line, then one space-separated
record per frame: `timestamp_ms face_present(0|1) x y z x y z ...`.
Parsing is streaming (constant memory in stream length).

MetricPacket and SessionRecord travel as JSON lines; the packet schema is
the single wire format shared with the ingestion service and the browser
client. Packets never contain landmark coordinates.
"""

from __future__ import annotations

import json
from typing import Iterable, Iterator

import numpy as np

from .errors import (
    FrameCountMismatch,
    MalformedHeader,
    NonMonotoneTimestamp,
    SchemaViolation,
)
from .types import LandmarkFrame, MetricPacket, SessionMeta, SessionRecord

STREAM_FORMAT = "fw-landmark-stream"
STREAM_VERSION = 1

PACKET_FIELDS = (
    "session_id",
    "user_id",
    "timestamp_ms",
    "emotion_label",
    "anomaly_level",
    "face_present",
)


# ---------------------------------------------------------------------------
# SessionMeta <-> dict
# ---------------------------------------------------------------------------

def meta_to_dict(meta: SessionMeta) -> dict:
    return {
        "session_id": meta.session_id,
        "user_id": meta.user_id,
        "course_type": meta.course_type,
        "session_kind": meta.session_kind,
        "started_at": meta.started_at,
        "landmark_count": meta.landmark_count,
        "course_vocabulary": list(meta.course_vocabulary),
    }


def meta_from_dict(d: dict) -> SessionMeta:
    return SessionMeta(
        session_id=d["session_id"],
        user_id=d["user_id"],
        course_type=d["course_type"],
        session_kind=d["session_kind"],
        started_at=d["started_at"],
        landmark_count=int(d["landmark_count"]),
        course_vocabulary=tuple(d.get("course_vocabulary", ())),
    )


# ---------------------------------------------------------------------------
# Landmark streams
# ---------------------------------------------------------------------------

def format_frame(frame: LandmarkFrame) -> str:
    if not frame.face_present:
        return f"{frame.timestamp_ms} 0"
    coords = " ".join(repr(float(v)) for v in frame.points.ravel())
    return f"{frame.timestamp_ms} 1 {coords}"


def write_stream(meta: SessionMeta, frames: Iterable[LandmarkFrame], path) -> None:
    header = {
        "format": STREAM_FORMAT,
        "version": STREAM_VERSION,
        "landmark_count": meta.landmark_count,
        "meta": meta_to_dict(meta),
    }
    with open(path, "w") as fh:
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for frame in frames:
            frame.validate_count(meta.landmark_count)
            fh.write(format_frame(frame) + "\n")


def _iter_frames(fh, landmark_count: int) -> Iterator[LandmarkFrame]:
    expected = 3 * landmark_count
    prev_ts = -1
    for lineno, line in enumerate(fh, start=2):
        parts = line.split()
        if not parts:
            continue
        try:
            ts = int(parts[0])
            present = parts[1] == "1"
        except (ValueError, IndexError) as exc:
            raise MalformedHeader(f"bad frame record at line {lineno}") from exc
        if ts < prev_ts:
            raise NonMonotoneTimestamp(
                f"timestamp {ts} after {prev_ts} at line {lineno}"
            )
        prev_ts = ts
        if present:
            coords = np.array([float(v) for v in parts[2:]])
            if len(coords) != expected:
                raise FrameCountMismatch(
                    f"line {lineno}: {len(coords)} coordinates, expected {expected}"
                )
            yield LandmarkFrame(ts, coords.reshape(landmark_count, 3), True)
        else:
            yield LandmarkFrame(ts, np.empty((0, 3)), False)


def parse_stream(path) -> tuple[SessionMeta, Iterator[LandmarkFrame]]:
    """Returns the header meta and a lazy frame iterator. The caller owns
    iteration; the file closes when the iterator is exhausted."""
    fh = open(path)
    try:
        header = json.loads(fh.readline())
    except json.JSONDecodeError as exc:
        fh.close()
        raise MalformedHeader(f"not a landmark stream: {path}") from exc
    if header.get("format") != STREAM_FORMAT:
        fh.close()
        raise MalformedHeader(f"unexpected stream format in {path}")
    if header.get("version") != STREAM_VERSION:
        fh.close()
        raise MalformedHeader(f"unsupported stream version {header.get('version')}")
    meta = meta_from_dict(header["meta"])

    def gen():
        with fh:
            yield from _iter_frames(fh, meta.landmark_count)

    return meta, gen()


# ---------------------------------------------------------------------------
# MetricPacket lines
# ---------------------------------------------------------------------------

def packet_to_dict(packet: MetricPacket) -> dict:
    return {field: getattr(packet, field) for field in PACKET_FIELDS}


def packet_from_dict(d: dict) -> MetricPacket:
    missing = [f for f in PACKET_FIELDS if f not in d]
    if missing:
        raise SchemaViolation(f"packet missing fields {missing}")
    try:
        return MetricPacket(
            session_id=str(d["session_id"]),
            user_id=str(d["user_id"]),
            timestamp_ms=int(d["timestamp_ms"]),
            emotion_label=str(d["emotion_label"]),
            anomaly_level=float(d["anomaly_level"]),
            face_present=bool(d["face_present"]),
        )
    except (ValueError, TypeError) as exc:
        raise SchemaViolation(str(exc)) from exc


def packet_to_line(packet: MetricPacket) -> str:
    return json.dumps(packet_to_dict(packet), sort_keys=True)


def packet_from_line(line: str) -> MetricPacket:
    try:
        d = json.loads(line)
    except json.JSONDecodeError as exc:
        raise SchemaViolation(f"unparseable packet line: {line[:80]!r}") from exc
    if not isinstance(d, dict):
        raise SchemaViolation("packet line is not an object")
    return packet_from_dict(d)


def write_packets(packets: Iterable[MetricPacket], path) -> None:
    with open(path, "w") as fh:
        for p in packets:
            fh.write(packet_to_line(p) + "\n")


def read_packets(path) -> list[MetricPacket]:
    with open(path) as fh:
        return [packet_from_line(line) for line in fh if line.strip()]


# ---------------------------------------------------------------------------
# SessionRecord files (typed JSON lines)
# ---------------------------------------------------------------------------

def write_session_record(record: SessionRecord, path) -> None:
    with open(path, "w") as fh:
        fh.write(json.dumps({"type": "meta", **meta_to_dict(record.meta)}, sort_keys=True) + "\n")
        for t, kind in record.events:
            fh.write(json.dumps({"type": "event", "timestamp_ms": t, "event_kind": kind}, sort_keys=True) + "\n")
        survey = {
            "type": "survey",
            "quiz_score": record.quiz_score,
            "self_report_distraction": record.self_report_distraction,
            "perceived_accuracy": record.perceived_accuracy,
        }
        fh.write(json.dumps(survey, sort_keys=True) + "\n")
        for p in record.packets:
            fh.write(json.dumps({"type": "packet", **packet_to_dict(p)}, sort_keys=True) + "\n")


def read_session_record(path) -> SessionRecord:
    meta = None
    packets, events = [], []
    survey = {}
    with open(path) as fh:
        for line in fh:
            if not line.strip():
                continue
            d = json.loads(line)
            kind = d.pop("type", None)
            if kind == "meta":
                meta = meta_from_dict(d)
            elif kind == "packet":
                packets.append(packet_from_dict(d))
            elif kind == "event":
                events.append((int(d["timestamp_ms"]), str(d["event_kind"])))
            elif kind == "survey":
                survey = d
            else:
                raise SchemaViolation(f"unknown record line type {kind!r}")
    if meta is None:
        raise MalformedHeader(f"session record {path} has no meta line")
    return SessionRecord(
        meta=meta,
        packets=tuple(packets),
        events=tuple(events),
        quiz_score=survey.get("quiz_score"),
        self_report_distraction=survey.get("self_report_distraction"),
        perceived_accuracy=survey.get("perceived_accuracy"),
    )


# ---------------------------------------------------------------------------
# Focus log (CSV, plottable)
# ---------------------------------------------------------------------------

FOCUS_LOG_HEADER = "timestamp_ms,raw_level,smoothed_level,emotion_label,face_present"


def write_focus_log(rows, path) -> None:
    """rows: iterable of (timestamp_ms, raw, smoothed, emotion_label,
    face_present)."""
    with open(path, "w") as fh:
        fh.write(FOCUS_LOG_HEADER + "\n")
        for ts, raw, smoothed, label, present in rows:
            fh.write(f"{ts},{raw!r},{smoothed!r},{label},{int(present)}\n")

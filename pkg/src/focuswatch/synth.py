"""Deterministic synthetic session generator for the FS / DAS / MWS
evaluation protocol.

FS is small-noise jitter around the canonical template with natural
micro-motion. DAS adds, at each scheduled notification, a 2-5 s head-turn
plus gaze-shift excursion. MWS adds slow sustained gaze drift with reduced
micro-motion over long stretches. Ground-truth distraction intervals are
emitted alongside the frames so detector evaluation is objective.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidSpec
from .geometry import CanonicalFaceTemplate, euler_to_matrix
from .types import LandmarkFrame, SessionMeta

COORD_DECIMALS = 6  # quantize synthetic coordinates for compact stream files


@dataclass(frozen=True)
class SyntheticSessionSpec:
    session_kind: str = "FS"
    duration_s: float = 600.0
    fps: float = 10.0
    seed: int = 0
    # DAS: notification timestamps in seconds; None = schedule 5 at random
    notification_times_s: tuple[float, ...] | None = None
    head_turn_deg: float = 25.0  # DAS excursion yaw amplitude
    gaze_shift: float = 0.6  # DAS excursion gaze amplitude
    drift_amplitude: float = 0.35  # MWS sustained gaze drift
    drift_period_s: float = 90.0  # MWS alternation period
    no_face_rate: float = 0.0  # per-frame blink/occlusion probability
    jitter_deg: float = 1.2  # FS micro-motion pose scale
    gaze_jitter: float = 0.04
    landmark_noise: float = 0.0008

    def __post_init__(self):
        if self.session_kind not in ("FS", "DAS", "MWS"):
            raise InvalidSpec(f"unknown session kind {self.session_kind!r}")
        if self.duration_s <= 0 or self.fps <= 0:
            raise InvalidSpec("duration_s and fps must be positive")
        if self.session_kind == "DAS" and self.notification_times_s is not None:
            if len(self.notification_times_s) < 1:
                raise InvalidSpec("a DAS spec needs at least one notification")
        if self.session_kind == "FS" and self.notification_times_s:
            raise InvalidSpec("an FS spec has no injected distraction events")


@dataclass(frozen=True)
class GroundTruthInterval:
    start_ms: int
    end_ms: int
    kind: str


@dataclass(frozen=True)
class GeneratedSession:
    frames: list[LandmarkFrame]
    events: list[tuple[int, str]]  # (timestamp_ms, event_kind)
    intervals: list[GroundTruthInterval]


class _OrnsteinUhlenbeck:
    """Mean-reverting jitter process; one value per dimension per step."""

    def __init__(self, rng, dims, scale, theta=0.15):
        self.rng = rng
        self.x = np.zeros(dims)
        self.scale = scale
        self.theta = theta

    def step(self):
        noise = self.rng.normal(0.0, 1.0, size=self.x.shape)
        self.x += -self.theta * self.x + self.theta**0.5 * self.scale * noise
        return self.x.copy()


def _raised_cosine(t: float, start: float, duration: float) -> float:
    """Smooth 0 -> 1 -> 0 envelope over [start, start + duration]."""
    if t < start or t > start + duration:
        return 0.0
    phase = (t - start) / duration
    return 0.5 * (1.0 - math.cos(2.0 * math.pi * phase))


def _displace_iris(points, template, gx, gy):
    for eye in (template.left_eye, template.right_eye):
        inner, outer = points[eye.inner], points[eye.outer]
        corner = outer - inner
        half = 0.5 * float(np.linalg.norm(corner))
        u_hat = corner / (2.0 * half)
        lid = points[eye.upper] - points[eye.lower]
        v_hat = lid / float(np.linalg.norm(lid))
        center = 0.5 * (inner + outer)
        points[eye.iris] = center + gx * half * u_hat + gy * half * v_hat


def generate_session(
    spec: SyntheticSessionSpec, template: CanonicalFaceTemplate
) -> GeneratedSession:
    """Deterministic for a fixed spec (seed included)."""
    rng = np.random.default_rng(spec.seed)
    n_frames = int(round(spec.duration_s * spec.fps))
    dt = 1.0 / spec.fps

    events: list[tuple[int, str]] = []
    intervals: list[GroundTruthInterval] = []
    excursions: list[tuple[float, float, float, float]] = []  # start, dur, side, gaze side
    if spec.session_kind == "DAS":
        if spec.notification_times_s is not None:
            notif = list(spec.notification_times_s)
        else:
            notif = sorted(
                rng.uniform(60.0, max(spec.duration_s - 10.0, 61.0), size=5)
            )
        for t0 in notif:
            dur = float(rng.uniform(2.0, 5.0))
            side = float(rng.choice((-1.0, 1.0)))
            excursions.append((float(t0), dur, side, side))
            events.append((int(round(t0 * 1000)), "notification_sound"))
            intervals.append(
                GroundTruthInterval(
                    int(round(t0 * 1000)), int(round((t0 + dur) * 1000)), "divided_attention"
                )
            )
    elif spec.session_kind == "MWS":
        # alternating focus / drift stretches; drift covers the second half
        # of every period
        t0 = spec.drift_period_s / 2.0
        while t0 < spec.duration_s:
            end = min(t0 + spec.drift_period_s / 2.0, spec.duration_s)
            events.append((int(round(t0 * 1000)), "mind_wandering"))
            intervals.append(
                GroundTruthInterval(int(round(t0 * 1000)), int(round(end * 1000)), "mind_wandering")
            )
            t0 += spec.drift_period_s

    micro_scale = 0.4 if spec.session_kind == "MWS" else 1.0
    pose_ou = _OrnsteinUhlenbeck(rng, 3, spec.jitter_deg * micro_scale)
    gaze_ou = _OrnsteinUhlenbeck(rng, 2, spec.gaze_jitter * micro_scale)
    shift_ou = _OrnsteinUhlenbeck(rng, 3, 0.002 * micro_scale)

    centroid = template.points.mean(axis=0)
    frames: list[LandmarkFrame] = []
    for i in range(n_frames):
        t = i * dt
        ts = int(round(t * 1000))
        if rng.random() < spec.no_face_rate:
            frames.append(LandmarkFrame(ts, np.empty((0, 3)), False))
            continue

        yaw, pitch, roll = pose_ou.step()
        gx, gy = gaze_ou.step()
        shift = shift_ou.step()

        if spec.session_kind == "DAS":
            for start, dur, side, gside in excursions:
                env = _raised_cosine(t, start, dur)
                if env > 0.0:
                    yaw += side * spec.head_turn_deg * env
                    pitch += 0.2 * side * spec.head_turn_deg * env
                    gx += gside * spec.gaze_shift * env
        elif spec.session_kind == "MWS":
            phase = 2.0 * math.pi * t / spec.drift_period_s
            drift = spec.drift_amplitude * 0.5 * (1.0 - math.cos(phase))
            gx += drift
            gy += 0.4 * drift
            yaw += 4.0 * 0.5 * (1.0 - math.cos(phase))

        pts = template.points.copy()
        _displace_iris(pts, template, float(gx), float(gy))
        rot = euler_to_matrix(float(yaw), float(pitch), float(roll))
        pts = (pts - centroid) @ rot.T + centroid + shift
        pts += rng.normal(0.0, spec.landmark_noise, size=pts.shape)
        np.round(pts, COORD_DECIMALS, out=pts)
        frames.append(LandmarkFrame(ts, pts, True))

    return GeneratedSession(frames=frames, events=events, intervals=intervals)


def make_session_meta(
    spec: SyntheticSessionSpec,
    template: CanonicalFaceTemplate,
    session_id: str | None = None,
    user_id: str = "synth-user",
    course_type: str = "video",
) -> SessionMeta:
    return SessionMeta(
        session_id=session_id or f"{spec.session_kind.lower()}-{spec.seed}",
        user_id=user_id,
        course_type=course_type,
        session_kind=spec.session_kind,
        started_at="1970-01-01T00:00:00Z",
        landmark_count=template.landmark_count,
    )

"""Shared domain types: landmark frames, emotion distributions, feature
vectors, metric packets, and session records.

All types are immutable after construction and safe to share across
threads/sessions without locking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DimensionMismatch, UnknownCourseType

EMOTION_LABELS = (
    "Neutral",
    "Happiness",
    "Sadness",
    "Surprise",
    "Fear",
    "Disgust",
    "Anger",
    "Contempt",
    "None",
    "Uncertain",
    "No-Face",
)
N_EMOTIONS = len(EMOTION_LABELS)

SESSION_KINDS = ("FS", "DAS", "MWS", "LIVE")

DEFAULT_COURSE_TYPES = ("lecture", "video", "exercise")
DEFAULT_LANDMARK_COUNT = 478
DEFAULT_PCA_COMPONENTS = 16


@dataclass(frozen=True)
class LandmarkFrame:
    """One timestamped set of 3D facial mesh points, or an explicit
    no-face marker (face_present=False with empty points)."""

    timestamp_ms: int
    points: np.ndarray  # (n, 3) float64, empty when face_present is False
    face_present: bool

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if self.face_present:
            if pts.ndim != 2 or pts.shape[1] != 3:
                raise DimensionMismatch(
                    f"expected (n, 3) point array, got shape {pts.shape}"
                )
        else:
            pts = pts.reshape(0, 3)
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)
        if self.timestamp_ms < 0:
            raise ValueError("timestamp_ms must be non-negative")

    def validate_count(self, landmark_count: int) -> None:
        if self.face_present and len(self.points) != landmark_count:
            raise DimensionMismatch(
                f"frame at t={self.timestamp_ms} has {len(self.points)} points, "
                f"expected {landmark_count}"
            )


@dataclass(frozen=True)
class SessionMeta:
    session_id: str
    user_id: str
    course_type: str
    session_kind: str
    started_at: str  # ISO-8601 wall clock
    landmark_count: int = DEFAULT_LANDMARK_COUNT
    course_vocabulary: tuple[str, ...] = DEFAULT_COURSE_TYPES

    def __post_init__(self):
        if self.session_kind not in SESSION_KINDS:
            raise ValueError(f"session_kind must be one of {SESSION_KINDS}")
        if self.course_type not in self.course_vocabulary:
            raise UnknownCourseType(
                f"course_type {self.course_type!r} not in {self.course_vocabulary}"
            )
        if self.landmark_count <= 0:
            raise ValueError("landmark_count must be positive")
        object.__setattr__(self, "course_vocabulary", tuple(self.course_vocabulary))


@dataclass(frozen=True)
class EmotionDistribution:
    """Probabilities over the fixed 11-label emotion set."""

    probabilities: np.ndarray  # (11,) float64, sums to 1

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=np.float64)
        if p.shape != (N_EMOTIONS,):
            raise DimensionMismatch(f"expected {N_EMOTIONS} probabilities, got {p.shape}")
        if np.any(p < 0) or not math.isclose(float(p.sum()), 1.0, abs_tol=1e-9):
            raise ValueError("probabilities must be non-negative and sum to 1")
        p.flags.writeable = False
        object.__setattr__(self, "probabilities", p)

    @classmethod
    def point_mass(cls, label: str) -> "EmotionDistribution":
        p = np.zeros(N_EMOTIONS)
        p[EMOTION_LABELS.index(label)] = 1.0
        return cls(p)


def argmax_emotion(dist: EmotionDistribution) -> str:
    """Label of the maximal probability; ties go to the lowest label index."""
    return EMOTION_LABELS[int(np.argmax(dist.probabilities))]


@dataclass(frozen=True)
class FeatureVector:
    """Concatenated anomaly-detector input, in canonical field order:
    emotion (11) | gaze (2) | head_pose (3, degrees) | landmark_pca (k) |
    course one-hot (m)."""

    emotion: np.ndarray
    gaze: tuple[float, float]
    head_pose: tuple[float, float, float]
    landmark_pca: np.ndarray
    metadata: np.ndarray

    def as_array(self) -> np.ndarray:
        return np.concatenate(
            [
                self.emotion,
                np.asarray(self.gaze, dtype=np.float64),
                np.asarray(self.head_pose, dtype=np.float64),
                self.landmark_pca,
                self.metadata,
            ]
        )

    @property
    def dimension(self) -> int:
        return N_EMOTIONS + 2 + 3 + len(self.landmark_pca) + len(self.metadata)


def assemble_feature_vector(
    emotion: EmotionDistribution,
    gaze: tuple[float, float],
    head_pose: tuple[float, float, float],
    pca_coeffs,
    meta: SessionMeta,
    n_components: int = DEFAULT_PCA_COMPONENTS,
) -> FeatureVector:
    """Builds the canonical feature vector for one frame.

    pca_coeffs must have the configured length; the course type is one-hot
    encoded over the session's closed vocabulary.
    """
    coeffs = np.asarray(pca_coeffs, dtype=np.float64)
    if coeffs.shape != (n_components,):
        raise DimensionMismatch(
            f"expected {n_components} PCA coefficients, got shape {coeffs.shape}"
        )
    if meta.course_type not in meta.course_vocabulary:
        raise UnknownCourseType(meta.course_type)
    onehot = np.zeros(len(meta.course_vocabulary))
    onehot[meta.course_vocabulary.index(meta.course_type)] = 1.0
    return FeatureVector(
        emotion=np.array(emotion.probabilities),
        gaze=(float(gaze[0]), float(gaze[1])),
        head_pose=(float(head_pose[0]), float(head_pose[1]), float(head_pose[2])),
        landmark_pca=coeffs,
        metadata=onehot,
    )


@dataclass(frozen=True)
class MetricPacket:
    """The privacy-preserving processed record sent client-to-server.
    Never carries landmark coordinates or image data."""

    session_id: str
    user_id: str
    timestamp_ms: int
    emotion_label: str
    anomaly_level: float
    face_present: bool

    def __post_init__(self):
        if not 0.0 <= self.anomaly_level <= 1.0:
            raise ValueError("anomaly_level must lie in [0, 1]")
        if self.emotion_label not in EMOTION_LABELS:
            raise ValueError(f"unknown emotion label {self.emotion_label!r}")


@dataclass(frozen=True)
class SessionRecord:
    """A full session: metadata, time-ordered packets, injected event
    markers, and optional quiz / Likert survey answers."""

    meta: SessionMeta
    packets: tuple[MetricPacket, ...]
    events: tuple[tuple[int, str], ...] = ()
    quiz_score: int | None = None
    self_report_distraction: int | None = None
    perceived_accuracy: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "packets", tuple(self.packets))
        object.__setattr__(self, "events", tuple((int(t), str(k)) for t, k in self.events))
        if self.quiz_score is not None and not 0 <= self.quiz_score <= 10:
            raise ValueError("quiz_score must lie in [0, 10]")
        for name in ("self_report_distraction", "perceived_accuracy"):
            v = getattr(self, name)
            if v is not None and not 1 <= v <= 7:
                raise ValueError(f"{name} must lie in [1, 7]")

"""End-to-end frame pipeline: landmarks -> geometry features -> emotion ->
PCA -> one-class SVM scoring, plus focus-window training that produces a
complete per-user model bundle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import anomaly, emotion, geometry
from .anomaly import (
    AnomalyScorerState,
    FocusWindowConfig,
    WindowFrame,
    feature_from_window_frame,
    focus_window_train,
)
from .bundle import ModelBundle
from .calibration import apply_gaze_map
from .types import (
    EmotionDistribution,
    LandmarkFrame,
    MetricPacket,
    SessionMeta,
    argmax_emotion,
)

NO_FACE_DIST = EmotionDistribution.point_mass("No-Face")


def extract_window_frame(
    frame: LandmarkFrame,
    template: geometry.CanonicalFaceTemplate,
    mlp: emotion.MlpModel,
    gaze_map=None,
) -> WindowFrame:
    """Per-frame features that exist before PCA: normalized landmark
    vector, emotion distribution, gaze (calibrated when a map exists),
    head pose. No-face frames produce an empty WindowFrame."""
    if not frame.face_present:
        return WindowFrame(frame.timestamp_ms, None, None, None, None)
    normalized = geometry.normalize_landmarks(frame, template)
    pose = geometry.estimate_head_pose(frame, template)
    gaze = geometry.estimate_gaze(frame, template)
    if gaze_map is not None:
        gaze = apply_gaze_map(gaze_map, gaze)
    dist = emotion.infer(mlp, normalized.ravel())
    return WindowFrame(
        timestamp_ms=frame.timestamp_ms,
        landmark_vec=normalized.ravel(),
        emotion=dist,
        gaze=gaze,
        head_pose=pose.as_tuple(),
    )


def train_from_frames(
    frames,
    meta: SessionMeta,
    template: geometry.CanonicalFaceTemplate,
    mlp: emotion.MlpModel,
    config: FocusWindowConfig = FocusWindowConfig(),
    gaze_map=None,
):
    """Runs the focus-window trainer over a frame stream and returns
    (ModelBundle, FocusModel-with-window-stats)."""
    window_frames = []
    limit_ms = config.window_seconds * 1000.0
    for frame in frames:
        if frame.timestamp_ms >= limit_ms:
            break
        frame.validate_count(meta.landmark_count)
        window_frames.append(extract_window_frame(frame, template, mlp, gaze_map))
    focus = focus_window_train(window_frames, meta, config)
    bundle = ModelBundle(
        ocsvm=focus.ocsvm,
        pca=focus.pca,
        mlp=mlp,
        config=config,
        landmark_count=meta.landmark_count,
        course_vocabulary=meta.course_vocabulary,
        gaze_map=gaze_map,
    )
    return bundle, focus


@dataclass
class ScoredFrame:
    packet: MetricPacket
    raw_level: float
    smoothed_level: float


class ScoringSession:
    """Sequential scorer for one session stream; owns its smoothing
    state, so never share an instance across streams."""

    def __init__(self, bundle: ModelBundle, template, meta: SessionMeta):
        if meta.landmark_count != bundle.landmark_count:
            raise ValueError(
                f"stream landmark count {meta.landmark_count} != "
                f"bundle landmark count {bundle.landmark_count}"
            )
        self.bundle = bundle
        self.template = template
        self.meta = meta
        self.state = AnomalyScorerState(
            model=bundle.ocsvm, smoothing=bundle.config.smoothing
        )
        self.calibrated = bundle.gaze_map is not None

    def process(self, frame: LandmarkFrame) -> ScoredFrame:
        frame.validate_count(self.meta.landmark_count)
        wf = extract_window_frame(
            frame, self.template, self.bundle.mlp, self.bundle.gaze_map
        )
        if wf.face_present:
            fv = feature_from_window_frame(
                wf, self.bundle.pca, self.meta, self.bundle.config.n_components
            )
            label = argmax_emotion(wf.emotion)
            raw, smoothed = self.state.score_frame(fv)
        else:
            label = "No-Face"
            raw, smoothed = self.state.score_frame(None)
        packet = MetricPacket(
            session_id=self.meta.session_id,
            user_id=self.meta.user_id,
            timestamp_ms=frame.timestamp_ms,
            emotion_label=label,
            anomaly_level=smoothed,
            face_present=frame.face_present,
        )
        return ScoredFrame(packet=packet, raw_level=raw, smoothed_level=smoothed)


def score_frames(frames, bundle: ModelBundle, template, meta: SessionMeta):
    """Scores a whole stream; returns the ScoredFrame list."""
    session = ScoringSession(bundle, template, meta)
    return [session.process(frame) for frame in frames]


def default_emotion_model(
    template, seed: int = 7, epochs: int = 60
) -> emotion.MlpModel:
    """Desk-scale stand-in for externally trained weights: fits the
    surrogate landmark clusters for the first eight label classes."""
    x, y = emotion.make_surrogate_dataset(
        template, classes=tuple(range(8)), per_class=24, seed=seed
    )
    model, _ = emotion.train(x, y, epochs=epochs, learning_rate=0.5, seed=seed)
    return model

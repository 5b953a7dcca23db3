"""Learner-distraction detection engine: turns 3D facial-landmark streams
into emotion labels and per-frame anomaly levels via a per-user one-class
SVM trained on an assumed-focused opening window."""

from .anomaly import (
    AnomalyScorerState,
    FocusWindowConfig,
    KernelSpec,
    OneClassSvmModel,
    SMO_BACKEND,
    anomaly_level,
    baseline_face_direction_score,
    decision_value,
    focus_window_train,
    train_ocsvm,
)
from .bundle import ModelBundle, load_bundle, save_bundle
from .calibration import CalibrationPlan, GazeMap, apply_gaze_map, run_calibration
from .geometry import (
    CanonicalFaceTemplate,
    HeadPose,
    default_template,
    estimate_gaze,
    estimate_head_pose,
    make_synthetic_template,
    normalize_landmarks,
)
from .types import (
    EMOTION_LABELS,
    EmotionDistribution,
    FeatureVector,
    LandmarkFrame,
    MetricPacket,
    SessionMeta,
    SessionRecord,
    argmax_emotion,
    assemble_feature_vector,
)

__version__ = "0.1.0"

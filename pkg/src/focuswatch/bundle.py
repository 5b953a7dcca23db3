"""Per-user model bundle: everything needed to score a session stream,
in one versioned JSON container (PCA, emotion network weights, one-class
SVM solution, focus-window config, optional gaze map).

JSON keeps floats at full round-trip precision, so a bundle loads
bit-identically here and in the browser client.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .anomaly import FocusWindowConfig, KernelSpec, OneClassSvmModel
from .calibration import GazeMap
from .dimreduce import PcaModel
from .emotion import MlpModel
from .errors import FormatVersionMismatch, MalformedHeader
from .types import DEFAULT_COURSE_TYPES

BUNDLE_FORMAT = "fw-model-bundle"
BUNDLE_VERSION = 1


@dataclass(frozen=True)
class ModelBundle:
    ocsvm: OneClassSvmModel
    pca: PcaModel
    mlp: MlpModel
    config: FocusWindowConfig
    landmark_count: int
    course_vocabulary: tuple[str, ...] = DEFAULT_COURSE_TYPES
    gaze_map: GazeMap | None = None

    def with_gaze_map(self, gaze_map: GazeMap) -> "ModelBundle":
        from dataclasses import replace

        return replace(self, gaze_map=gaze_map)


def _arr(a) -> list:
    return np.asarray(a, dtype=np.float64).tolist()


def bundle_to_dict(bundle: ModelBundle) -> dict:
    svm = bundle.ocsvm
    d = {
        "format": BUNDLE_FORMAT,
        "version": BUNDLE_VERSION,
        "landmark_count": bundle.landmark_count,
        "course_vocabulary": list(bundle.course_vocabulary),
        "ocsvm": {
            "support_vectors": _arr(svm.support_vectors),
            "alphas": _arr(svm.alphas),
            "rho": svm.rho,
            "kernel": {"kind": svm.kernel.kind, "gamma": svm.kernel.gamma},
            "nu": svm.nu,
            "score_scale": svm.score_scale,
            "training_count": svm.training_count,
        },
        "pca": {
            "mean": _arr(bundle.pca.mean),
            "components": _arr(bundle.pca.components),
            "explained_variance_ratio": _arr(bundle.pca.explained_variance_ratio),
        },
        "mlp": {
            "w1": _arr(bundle.mlp.w1),
            "b1": _arr(bundle.mlp.b1),
            "w2": _arr(bundle.mlp.w2),
            "b2": _arr(bundle.mlp.b2),
        },
        "focus_config": {
            "window_seconds": bundle.config.window_seconds,
            "min_frames": bundle.config.min_frames,
            "nu": bundle.config.nu,
            "kernel": {"kind": bundle.config.kernel.kind, "gamma": bundle.config.kernel.gamma},
            "n_components": bundle.config.n_components,
            "smoothing": bundle.config.smoothing,
        },
        "gaze_map": None,
    }
    if bundle.gaze_map is not None:
        d["gaze_map"] = {
            "a": _arr(bundle.gaze_map.a),
            "b": _arr(bundle.gaze_map.b),
            "rms_residual": bundle.gaze_map.rms_residual,
            "samples_used": bundle.gaze_map.samples_used,
        }
    return d


def bundle_from_dict(d: dict) -> ModelBundle:
    if d.get("format") != BUNDLE_FORMAT:
        raise MalformedHeader("not a model bundle")
    if d.get("version") != BUNDLE_VERSION:
        raise FormatVersionMismatch(f"unsupported bundle version {d.get('version')}")
    svm = d["ocsvm"]
    cfg = d["focus_config"]
    gm = d.get("gaze_map")
    return ModelBundle(
        ocsvm=OneClassSvmModel(
            support_vectors=np.array(svm["support_vectors"], dtype=np.float64),
            alphas=np.array(svm["alphas"], dtype=np.float64),
            rho=float(svm["rho"]),
            kernel=KernelSpec(svm["kernel"]["kind"], svm["kernel"]["gamma"]),
            nu=float(svm["nu"]),
            score_scale=float(svm["score_scale"]),
            training_count=int(svm["training_count"]),
        ),
        pca=PcaModel(
            mean=np.array(d["pca"]["mean"]),
            components=np.array(d["pca"]["components"]),
            explained_variance_ratio=np.array(d["pca"]["explained_variance_ratio"]),
        ),
        mlp=MlpModel(
            w1=np.array(d["mlp"]["w1"]),
            b1=np.array(d["mlp"]["b1"]),
            w2=np.array(d["mlp"]["w2"]),
            b2=np.array(d["mlp"]["b2"]),
        ),
        config=FocusWindowConfig(
            window_seconds=float(cfg["window_seconds"]),
            min_frames=int(cfg["min_frames"]),
            nu=float(cfg["nu"]),
            kernel=KernelSpec(cfg["kernel"]["kind"], cfg["kernel"]["gamma"]),
            n_components=int(cfg["n_components"]),
            smoothing=float(cfg["smoothing"]),
        ),
        landmark_count=int(d["landmark_count"]),
        course_vocabulary=tuple(d.get("course_vocabulary", DEFAULT_COURSE_TYPES)),
        gaze_map=None
        if gm is None
        else GazeMap(
            a=np.array(gm["a"]),
            b=np.array(gm["b"]),
            rms_residual=float(gm["rms_residual"]),
            samples_used=int(gm["samples_used"]),
        ),
    )


def save_bundle(bundle: ModelBundle, path) -> None:
    with open(path, "w") as fh:
        json.dump(bundle_to_dict(bundle), fh)


def load_bundle(path) -> ModelBundle:
    with open(path) as fh:
        return bundle_from_dict(json.load(fh))

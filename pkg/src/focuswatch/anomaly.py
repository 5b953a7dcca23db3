"""One-class SVM novelty detection: dual SMO solver, score-to-[0,1]
mapping, streaming scorer with EWMA smoothing, focus-window training,
and the face-direction baseline scorer.

The dual problem is
    minimize 0.5 * sum_ij a_i a_j K(x_i, x_j)
    subject to 0 <= a_i <= 1/(nu*l), sum_i a_i = 1,
and the decision function is f(x) = sum_i a_i K(x_i, x) - rho. Points
with f(x) < 0 are anomalous; anomaly_level maps f monotonically into
[0, 1] with the boundary pinned at 0.5.

The SMO inner loop runs in a compiled extension when available, with a
pure-Python fallback selected at import time (see SMO_BACKEND).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import dimreduce
from .errors import (
    DimensionMismatch,
    InfeasibleNu,
    InsufficientTrainingFrames,
    ModelNotTrained,
    NonConvergence,
    NonFiniteFeature,
)
from .types import (
    DEFAULT_PCA_COMPONENTS,
    EmotionDistribution,
    FeatureVector,
    SessionMeta,
    assemble_feature_vector,
)

try:
    from . import _fastsmo as _smo

    SMO_BACKEND = "compiled"
except ImportError:  # extension not built; numpy fallback
    from . import _slowsmo as _smo

    SMO_BACKEND = "python"

KKT_TOL = 1e-6
ITER_FACTOR = 100
ALPHA_KEEP_TOL = 1e-12
SCORE_SCALE_FLOOR = 1e-6
GAMMA_FLOOR = 1e-9


@dataclass(frozen=True)
class KernelSpec:
    kind: str = "rbf"  # "rbf" or "linear"
    gamma: float | None = None  # None = median-distance policy at fit time

    def __post_init__(self):
        if self.kind not in ("rbf", "linear"):
            raise ValueError(f"unknown kernel kind {self.kind!r}")


def kernel_matrix(spec: KernelSpec, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """K[i, j] = k(a_i, b_j)."""
    if spec.kind == "linear":
        return a @ b.T
    sq = (
        np.sum(a * a, axis=1)[:, None]
        + np.sum(b * b, axis=1)[None, :]
        - 2.0 * (a @ b.T)
    )
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-spec.gamma * sq)


def median_gamma(x: np.ndarray) -> float:
    """Default RBF bandwidth: 1 / (d * median pairwise squared distance),
    floored at 1e-9."""
    n, d = x.shape
    sq = (
        np.sum(x * x, axis=1)[:, None]
        + np.sum(x * x, axis=1)[None, :]
        - 2.0 * (x @ x.T)
    )
    np.maximum(sq, 0.0, out=sq)
    med = float(np.median(sq[np.triu_indices(n, k=1)])) if n > 1 else 0.0
    if med <= 0.0:
        return 1.0
    return max(1.0 / (d * med), GAMMA_FLOOR)


@dataclass(frozen=True)
class OneClassSvmModel:
    support_vectors: np.ndarray  # (n_sv, d)
    alphas: np.ndarray  # (n_sv,), each in (1e-12, 1/(nu*l)]
    rho: float
    kernel: KernelSpec
    nu: float
    score_scale: float
    training_count: int
    iterations: int = 0

    def __post_init__(self):
        for name in ("support_vectors", "alphas"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def dimension(self) -> int:
        return self.support_vectors.shape[1]


def train_ocsvm(
    samples,
    nu: float = 0.1,
    kernel: KernelSpec = KernelSpec(),
    tol: float = KKT_TOL,
) -> OneClassSvmModel:
    """Fits the one-class dual by SMO.

    Raises InfeasibleNu when nu * n < 1 (sum(a) = 1 is then infeasible)
    and NonConvergence (with diagnostics) if the KKT violation has not
    dropped below tol after 100 * n pairwise updates.
    """
    x = np.ascontiguousarray(samples, dtype=np.float64)
    if x.ndim != 2 or len(x) == 0:
        raise InsufficientTrainingFrames("need a non-empty (n, d) sample matrix")
    if not np.all(np.isfinite(x)):
        raise NonFiniteFeature("training features contain non-finite values")
    n = len(x)
    if not 0.0 < nu <= 1.0 or nu * n < 1.0:
        raise InfeasibleNu(f"nu={nu} with n={n} makes sum(alpha)=1 infeasible")
    if kernel.kind == "rbf" and kernel.gamma is None:
        kernel = replace(kernel, gamma=median_gamma(x))
    c = 1.0 / (nu * n)
    k = kernel_matrix(kernel, x, x)
    alpha, grad, iterations, violation, converged = _smo.solve(
        np.ascontiguousarray(k), c, tol, ITER_FACTOR * n
    )
    if not converged:
        raise NonConvergence(
            f"SMO hit the {ITER_FACTOR * n}-iteration cap with KKT violation "
            f"{violation:.3g} > {tol:.3g}",
            iterations=iterations,
            violation=violation,
        )

    unbounded = (alpha > ALPHA_KEEP_TOL) & (alpha < c - 1e-12)
    if unbounded.any():
        rho = float(grad[unbounded].mean())
    else:
        at_c = alpha >= c - 1e-12
        at_zero = alpha <= ALPHA_KEEP_TOL
        lower = float(grad[at_c].max()) if at_c.any() else None
        upper = float(grad[at_zero].min()) if at_zero.any() else None
        if lower is None:
            rho = upper
        elif upper is None:
            rho = lower
        else:
            rho = 0.5 * (lower + upper)

    decisions = grad - rho  # f(x_i) on the training set
    scale = max(float(np.median(np.abs(decisions))), SCORE_SCALE_FLOOR)
    keep = alpha > ALPHA_KEEP_TOL
    return OneClassSvmModel(
        support_vectors=x[keep],
        alphas=alpha[keep],
        rho=rho,
        kernel=kernel,
        nu=nu,
        score_scale=scale,
        training_count=n,
        iterations=iterations,
    )


def _as_matrix(model: OneClassSvmModel, x) -> np.ndarray:
    if isinstance(x, FeatureVector):
        x = x.as_array()
    arr = np.asarray(x, dtype=np.float64)
    single = arr.ndim == 1
    arr = np.atleast_2d(arr)
    if arr.shape[1] != model.dimension:
        raise DimensionMismatch(
            f"feature dimension {arr.shape[1]} != model dimension {model.dimension}"
        )
    return arr, single


def decision_values(model: OneClassSvmModel, x) -> np.ndarray:
    arr, _ = _as_matrix(model, x)
    k = kernel_matrix(model.kernel, arr, model.support_vectors)
    return k @ model.alphas - model.rho


def decision_value(model: OneClassSvmModel, x) -> float:
    """f(x) = sum_i a_i K(x_i, x) - rho."""
    return float(decision_values(model, x)[0])


def anomaly_level(model: OneClassSvmModel, x) -> float:
    """Logistic of the negated, scale-normalized decision value: strictly
    monotone decreasing in f(x), 0.5 exactly on the boundary f = 0."""
    f = decision_value(model, x)
    return level_from_decision(f, model.score_scale)


def level_from_decision(f: float, scale: float) -> float:
    t = min(500.0, max(-500.0, f / scale))
    return 1.0 / (1.0 + math.exp(t))


def anomaly_levels(model: OneClassSvmModel, x) -> np.ndarray:
    f = decision_values(model, x) / model.score_scale
    np.clip(f, -500.0, 500.0, out=f)
    return 1.0 / (1.0 + np.exp(f))


NO_FACE = None  # sentinel accepted by score_frame


@dataclass
class AnomalyScorerState:
    """Per-session streaming scorer; owned by exactly one stream processor."""

    model: OneClassSvmModel | None
    smoothing: float = 0.2  # EWMA lambda in (0, 1]
    ewma: float | None = None
    frames_seen: int = 0

    def score_frame(self, fv) -> tuple[float, float]:
        """Raw and EWMA-smoothed anomaly level for one frame. A NoFace
        frame (fv is None) scores raw 1.0: an absent face is the limiting
        case of the face-aside distraction signal."""
        if self.model is None:
            raise ModelNotTrained("score_frame called before training")
        raw = 1.0 if fv is None else anomaly_level(self.model, fv)
        if self.ewma is None:
            self.ewma = raw
        else:
            self.ewma = self.smoothing * raw + (1.0 - self.smoothing) * self.ewma
        self.frames_seen += 1
        return raw, self.ewma


def score_frame(state: AnomalyScorerState, fv) -> tuple[float, float]:
    return state.score_frame(fv)


def baseline_face_direction_score(pose, threshold_deg: float = 30.0) -> float:
    """Proof-of-concept scorer: linear ramp of max(|yaw|, |pitch|) up to
    the threshold; centered face scores 0, face aside saturates at 1."""
    deviation = max(abs(pose.yaw), abs(pose.pitch))
    return min(1.0, deviation / threshold_deg)


# ---------------------------------------------------------------------------
# Focus-window training
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FocusWindowConfig:
    window_seconds: float = 600.0
    min_frames: int = 300
    nu: float = 0.1
    kernel: KernelSpec = KernelSpec()  # gamma=None -> median policy
    n_components: int = DEFAULT_PCA_COMPONENTS
    smoothing: float = 0.2

    def __post_init__(self):
        if self.window_seconds <= 0:
            raise ValueError("window_seconds must be positive")
        if not 0.0 < self.nu <= 1.0:
            raise ValueError("nu must lie in (0, 1]")


@dataclass(frozen=True)
class WindowFrame:
    """Per-frame inputs collected before PCA/OC-SVM exist: everything the
    feature vector needs except the PCA coefficients."""

    timestamp_ms: int
    landmark_vec: np.ndarray | None  # flattened normalized landmarks; None = no face
    emotion: EmotionDistribution | None
    gaze: tuple[float, float] | None
    head_pose: tuple[float, float, float] | None

    @property
    def face_present(self) -> bool:
        return self.landmark_vec is not None


@dataclass(frozen=True)
class FocusModel:
    """Everything fitted from one focus window."""

    ocsvm: OneClassSvmModel
    pca: dimreduce.PcaModel
    config: FocusWindowConfig
    window_frames: int
    usable_frames: int
    no_face_fraction: float


def feature_from_window_frame(
    frame: WindowFrame, pca: dimreduce.PcaModel, meta: SessionMeta, n_components: int
) -> FeatureVector:
    coeffs = dimreduce.transform(pca, frame.landmark_vec)
    return assemble_feature_vector(
        frame.emotion, frame.gaze, frame.head_pose, coeffs, meta, n_components
    )


def focus_window_train(
    frames: list[WindowFrame],
    meta: SessionMeta,
    config: FocusWindowConfig = FocusWindowConfig(),
) -> FocusModel:
    """Trains on the assumed-focused opening window of a session: frames
    with timestamp < window_seconds, no-face frames excluded. Fits PCA on
    the window's landmark vectors, assembles feature vectors, then trains
    the one-class SVM."""
    limit_ms = config.window_seconds * 1000.0
    window = [f for f in frames if f.timestamp_ms < limit_ms]
    usable = [f for f in window if f.face_present]
    if len(usable) < config.min_frames:
        raise InsufficientTrainingFrames(
            f"{len(usable)} usable frames in the focus window, "
            f"need at least {config.min_frames}"
        )
    lm = np.array([f.landmark_vec for f in usable])
    pca = dimreduce.fit(lm, config.n_components)
    feats = np.array(
        [
            feature_from_window_frame(f, pca, meta, config.n_components).as_array()
            for f in usable
        ]
    )
    ocsvm = train_ocsvm(feats, nu=config.nu, kernel=config.kernel)
    return FocusModel(
        ocsvm=ocsvm,
        pca=pca,
        config=config,
        window_frames=len(window),
        usable_frames=len(usable),
        no_face_fraction=1.0 - len(usable) / max(len(window), 1),
    )

"""Gaze calibration: the user looks at a sequence of on-screen targets;
dwell-averaged raw gaze per target is mapped to screen coordinates by an
ordinary-least-squares affine fit.

Calibration frames never join the anomaly model's focus window: an
instructed gaze sweep is not focused-viewing behavior.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateGeometry, InsufficientCalibration

COLLINEARITY_TOL = 1e-9
CONDITION_LIMIT = 1e12


def default_grid_targets() -> tuple[tuple[float, float], ...]:
    """3x3 grid over the normalized display square."""
    coords = (0.1, 0.5, 0.9)
    return tuple((u, v) for v in coords for u in coords)


@dataclass(frozen=True)
class CalibrationPlan:
    targets: tuple[tuple[float, float], ...] = field(default_factory=default_grid_targets)
    dwell_ms: int = 1500
    settle_ms: int = 500

    def __post_init__(self):
        object.__setattr__(
            self, "targets", tuple((float(u), float(v)) for u, v in self.targets)
        )
        if len(self.targets) < 3 or _collinear(np.array(self.targets)):
            raise InsufficientCalibration("need >= 3 non-collinear targets")


@dataclass(frozen=True)
class GazeSample:
    """One raw-gaze observation annotated with its target index."""

    timestamp_ms: int
    target_index: int
    gaze: tuple[float, float] | None  # None = no face, dropped


@dataclass(frozen=True)
class GazeMap:
    """Affine raw-gaze -> screen map: screen = A @ gaze + b."""

    a: np.ndarray  # (2, 2)
    b: np.ndarray  # (2,)
    rms_residual: float
    samples_used: int

    def __post_init__(self):
        for name in ("a", "b"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @classmethod
    def identity(cls) -> "GazeMap":
        return cls(a=np.eye(2), b=np.zeros(2), rms_residual=0.0, samples_used=0)


def _collinear(points: np.ndarray) -> bool:
    centered = points - points.mean(axis=0)
    s = np.linalg.svd(centered, compute_uv=False)
    return s[-1] < COLLINEARITY_TOL * max(s[0], COLLINEARITY_TOL)


def run_calibration(plan: CalibrationPlan, samples: list[GazeSample]) -> GazeMap:
    """Dwell-averages the raw gaze per target (discarding the first
    settle_ms after target onset and any no-face samples), then fits the
    affine map by ordinary least squares.

    Target onset is taken as the earliest sample timestamp for that
    target index.
    """
    per_target: dict[int, list[GazeSample]] = {}
    for s in samples:
        per_target.setdefault(s.target_index, []).append(s)

    means, screens = [], []
    used = 0
    for idx, target in enumerate(plan.targets):
        batch = per_target.get(idx, [])
        if not batch:
            continue
        onset = min(s.timestamp_ms for s in batch)
        kept = [
            s.gaze
            for s in batch
            if s.gaze is not None and s.timestamp_ms >= onset + plan.settle_ms
        ]
        if not kept:
            continue
        means.append(np.mean(np.asarray(kept, dtype=np.float64), axis=0))
        screens.append(target)
        used += len(kept)

    if len(means) < 3 or _collinear(np.array(screens)):
        raise InsufficientCalibration(
            f"only {len(means)} usable targets; need >= 3, non-collinear"
        )

    g = np.asarray(means)  # (t, 2) averaged raw gaze
    t = np.asarray(screens)  # (t, 2) screen coordinates
    design = np.hstack([g, np.ones((len(g), 1))])  # rows [gx, gy, 1]
    cond = np.linalg.cond(design)
    if not np.isfinite(cond) or cond > CONDITION_LIMIT:
        raise DegenerateGeometry(f"calibration system condition {cond:.3g} too large")
    coef, *_ = np.linalg.lstsq(design, t, rcond=None)  # (3, 2)
    a = coef[:2].T  # (2, 2)
    b = coef[2]
    residual = t - design @ coef
    rms = float(np.sqrt(np.mean(np.sum(residual**2, axis=1))))
    return GazeMap(a=a, b=b, rms_residual=rms, samples_used=used)


def apply_gaze_map(gaze_map: GazeMap, raw: tuple[float, float]) -> tuple[float, float]:
    """A @ raw + b, clamped to [-0.5, 1.5] per axis: modest off-screen
    readings pass through, outliers are bounded."""
    uv = gaze_map.a @ np.asarray(raw, dtype=np.float64) + gaze_map.b
    clamp = lambda v: float(min(1.5, max(-0.5, v)))
    return clamp(uv[0]), clamp(uv[1])

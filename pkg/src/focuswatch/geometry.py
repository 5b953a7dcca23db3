"""Geometric features from a landmark frame: normalized landmarks,
head-pose angles against a canonical template, and the eye-gaze offset
vector.

Head pose uses an orthogonal Procrustes (Kabsch) fit over a small set of
rigid anchor landmarks, so it is closed-form and deterministic. Euler
angles use the intrinsic yaw -> pitch -> roll convention: the fitted
rotation R maps template points onto frame points, R = Ry(yaw) @ Rx(pitch)
@ Rz(roll), angles in degrees.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateFace, MalformedHeader, NoFace
from .types import LandmarkFrame

TEMPLATE_MAGIC = "FWTEMPLATE"
TEMPLATE_VERSION = 1

GIMBAL_LOCK_DEG = 89.999


@dataclass(frozen=True)
class EyeIndices:
    """Landmark indices for one eye: corners, lids, iris center."""

    inner: int
    outer: int
    upper: int
    lower: int
    iris: int

    def as_tuple(self):
        return (self.inner, self.outer, self.upper, self.lower, self.iris)


@dataclass(frozen=True)
class CanonicalFaceTemplate:
    """Reference neutral-face landmark set plus the index sets (rigid
    anchors, per-eye landmarks) every geometric operation keys off."""

    points: np.ndarray  # (landmark_count, 3)
    anchor_indices: tuple[int, ...]
    left_eye: EyeIndices
    right_eye: EyeIndices

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "anchor_indices", tuple(self.anchor_indices))
        n = len(pts)
        used = list(self.anchor_indices) + list(self.left_eye.as_tuple()) + list(
            self.right_eye.as_tuple()
        )
        if any(i < 0 or i >= n for i in used):
            raise ValueError("template index out of range")
        if len(self.anchor_indices) < 4:
            raise ValueError("need at least 4 anchor landmarks")

    @property
    def landmark_count(self) -> int:
        return len(self.points)

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(f"{TEMPLATE_MAGIC} {TEMPLATE_VERSION}\n")
            fh.write(f"landmark_count {self.landmark_count}\n")
            fh.write("anchor_indices " + " ".join(map(str, self.anchor_indices)) + "\n")
            fh.write("left_eye " + " ".join(map(str, self.left_eye.as_tuple())) + "\n")
            fh.write("right_eye " + " ".join(map(str, self.right_eye.as_tuple())) + "\n")
            fh.write("points\n")
            for x, y, z in self.points:
                fh.write(f"{float(x)!r} {float(y)!r} {float(z)!r}\n")

    @classmethod
    def load(cls, path) -> "CanonicalFaceTemplate":
        with open(path) as fh:
            first = fh.readline().split()
            if len(first) != 2 or first[0] != TEMPLATE_MAGIC:
                raise MalformedHeader(f"not a face-template file: {path}")
            if int(first[1]) != TEMPLATE_VERSION:
                raise MalformedHeader(f"unsupported template version {first[1]}")
            fields = {}
            for _ in range(4):
                key, *vals = fh.readline().split()
                fields[key] = [int(v) for v in vals]
            if fh.readline().strip() != "points":
                raise MalformedHeader("missing points section")
            count = fields["landmark_count"][0]
            pts = np.loadtxt(fh, dtype=np.float64).reshape(count, 3)
        return cls(
            points=pts,
            anchor_indices=tuple(fields["anchor_indices"]),
            left_eye=EyeIndices(*fields["left_eye"]),
            right_eye=EyeIndices(*fields["right_eye"]),
        )


@dataclass(frozen=True)
class HeadPose:
    """Face orientation in degrees, intrinsic yaw -> pitch -> roll,
    each angle in (-180, 180]. gimbal_lock flags |pitch| >= 89.999."""

    yaw: float
    pitch: float
    roll: float
    gimbal_lock: bool = False

    def as_tuple(self):
        return (self.yaw, self.pitch, self.roll)


def euler_to_matrix(yaw_deg: float, pitch_deg: float, roll_deg: float) -> np.ndarray:
    """R = Ry(yaw) @ Rx(pitch) @ Rz(roll), angles in degrees."""
    a, b, c = (math.radians(v) for v in (yaw_deg, pitch_deg, roll_deg))
    ca, sa = math.cos(a), math.sin(a)
    cb, sb = math.cos(b), math.sin(b)
    cc, sc = math.cos(c), math.sin(c)
    ry = np.array([[ca, 0, sa], [0, 1, 0], [-sa, 0, ca]])
    rx = np.array([[1, 0, 0], [0, cb, -sb], [0, sb, cb]])
    rz = np.array([[cc, -sc, 0], [sc, cc, 0], [0, 0, 1]])
    return ry @ rx @ rz


def matrix_to_euler(rot: np.ndarray) -> HeadPose:
    """Inverse of euler_to_matrix; returns degrees with a gimbal-lock flag."""
    sb = -rot[1, 2]
    sb = min(1.0, max(-1.0, float(sb)))
    pitch = math.degrees(math.asin(sb))
    if abs(pitch) >= GIMBAL_LOCK_DEG:
        # yaw and roll degenerate to one angle; attribute it all to yaw
        yaw = math.degrees(math.atan2(-rot[2, 0], rot[0, 0]))
        return HeadPose(yaw=yaw, pitch=pitch, roll=0.0, gimbal_lock=True)
    yaw = math.degrees(math.atan2(rot[0, 2], rot[2, 2]))
    roll = math.degrees(math.atan2(rot[1, 0], rot[1, 1]))
    return HeadPose(yaw=yaw, pitch=pitch, roll=roll)


def _require_face(frame: LandmarkFrame) -> None:
    if not frame.face_present:
        raise NoFace(f"no face in frame at t={frame.timestamp_ms}")


def interocular_distance(points: np.ndarray, template: CanonicalFaceTemplate) -> float:
    a = points[template.left_eye.outer]
    b = points[template.right_eye.outer]
    return float(np.linalg.norm(a - b))


def normalize_landmarks(
    frame: LandmarkFrame, template: CanonicalFaceTemplate
) -> np.ndarray:
    """Centers the landmarks on their centroid and scales them so the
    outer-corner to outer-corner inter-ocular distance equals 1.

    Invariant to global translation and uniform scaling of the input.
    """
    _require_face(frame)
    pts = np.asarray(frame.points, dtype=np.float64)
    centered = pts - pts.mean(axis=0)
    iod = interocular_distance(centered, template)
    if iod < 1e-9:
        raise DegenerateFace("inter-ocular distance below 1e-9")
    return centered / iod


def _procrustes_rotation(src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """Least-squares rotation R with det +1 minimizing ||R @ src_i - dst_i||,
    after both sides are centered and scale-normalized by the caller."""
    h = src.T @ dst  # 3x3
    u, s, vt = np.linalg.svd(h)
    if s[1] < 1e-9 * max(s[0], 1e-300):
        raise DegenerateFace("anchor landmarks are collinear")
    d = np.sign(np.linalg.det(vt.T @ u.T))
    corr = np.diag([1.0, 1.0, d])
    return vt.T @ corr @ u.T


def estimate_head_pose(
    frame: LandmarkFrame, template: CanonicalFaceTemplate
) -> HeadPose:
    """Fits the rigid rotation carrying the template's anchor landmarks
    onto the frame's, and returns its Euler angles. The identity pose is
    (0, 0, 0); the fitted rotation always has determinant +1."""
    _require_face(frame)
    idx = list(template.anchor_indices)
    src = np.asarray(template.points[idx], dtype=np.float64)
    dst = np.asarray(frame.points[idx], dtype=np.float64)
    if not np.all(np.isfinite(dst)):
        raise DegenerateFace("non-finite anchor landmarks")

    def prep(p):
        q = p - p.mean(axis=0)
        scale = np.linalg.norm(q)
        if scale < 1e-12:
            raise DegenerateFace("anchor landmarks coincide")
        return q / scale

    rot = _procrustes_rotation(prep(src), prep(dst))
    return matrix_to_euler(rot)


def _single_eye_gaze(points: np.ndarray, eye: EyeIndices) -> tuple[float, float]:
    inner = points[eye.inner]
    outer = points[eye.outer]
    corner_vec = outer - inner
    corner_dist = float(np.linalg.norm(corner_vec))
    if corner_dist < 1e-9:
        raise DegenerateFace("eye corner distance below 1e-9")
    u_hat = corner_vec / corner_dist
    lid_vec = points[eye.upper] - points[eye.lower]
    lid_norm = float(np.linalg.norm(lid_vec))
    if lid_norm < 1e-9:
        raise DegenerateFace("eye lid axis degenerate")
    v_hat = lid_vec / lid_norm
    center = 0.5 * (inner + outer)
    offset = points[eye.iris] - center
    half = 0.5 * corner_dist
    return float(offset @ u_hat) / half, float(offset @ v_hat) / half


def estimate_gaze(
    frame: LandmarkFrame, template: CanonicalFaceTemplate
) -> tuple[float, float]:
    """Raw gaze offset: per eye, the iris displacement from the corner
    midpoint projected on the corner and lid axes, normalized by half the
    corner distance; the two eyes are averaged and clamped to [-2, 2]."""
    _require_face(frame)
    pts = np.asarray(frame.points, dtype=np.float64)
    lx, ly = _single_eye_gaze(pts, template.left_eye)
    rx, ry = _single_eye_gaze(pts, template.right_eye)
    gx = 0.5 * (lx + rx)
    gy = 0.5 * (ly + ry)
    clamp = lambda v: min(2.0, max(-2.0, v))
    return clamp(gx), clamp(gy)


# ---------------------------------------------------------------------------
# Synthetic canonical template
# ---------------------------------------------------------------------------

# Fixed semantic slots at the head of the index space.
_L_EYE = EyeIndices(inner=0, outer=1, upper=2, lower=3, iris=4)
_R_EYE = EyeIndices(inner=5, outer=6, upper=7, lower=8, iris=9)
_NOSE, _CHIN, _TEMPLE_L, _TEMPLE_R = 10, 11, 12, 13
_N_SEMANTIC = 14
MIN_LANDMARK_COUNT = _N_SEMANTIC


def make_synthetic_template(landmark_count: int = 478) -> CanonicalFaceTemplate:
    """Procedural neutral face: semantic landmarks at fixed positions,
    remaining points spread deterministically over a face-shaped ellipsoid.
    Coordinates live in the normalized image space (x right, y down, z
    relative depth; face centered near (0.5, 0.5))."""
    if landmark_count < MIN_LANDMARK_COUNT:
        raise ValueError(f"landmark_count must be >= {MIN_LANDMARK_COUNT}")
    pts = np.zeros((landmark_count, 3))
    ey = 0.42
    w = 0.05  # eye half-width
    # left eye (viewer left), inner/outer/upper/lower/iris
    pts[_L_EYE.inner] = (0.40, ey, -0.010)
    pts[_L_EYE.outer] = (0.30, ey, 0.000)
    pts[_L_EYE.upper] = (0.35, ey - 0.020, -0.008)
    pts[_L_EYE.lower] = (0.35, ey + 0.020, -0.008)
    pts[_L_EYE.iris] = (0.35, ey, -0.005)
    pts[_R_EYE.inner] = (0.60, ey, -0.010)
    pts[_R_EYE.outer] = (0.70, ey, 0.000)
    pts[_R_EYE.upper] = (0.65, ey - 0.020, -0.008)
    pts[_R_EYE.lower] = (0.65, ey + 0.020, -0.008)
    pts[_R_EYE.iris] = (0.65, ey, -0.005)
    pts[_NOSE] = (0.50, 0.55, -0.060)
    pts[_CHIN] = (0.50, 0.78, -0.015)
    pts[_TEMPLE_L] = (0.22, 0.42, 0.050)
    pts[_TEMPLE_R] = (0.78, 0.42, 0.050)
    # filler points on the front hemisphere of an ellipsoid via a golden
    # spiral: deterministic, roughly uniform coverage
    n_fill = landmark_count - _N_SEMANTIC
    golden = math.pi * (3.0 - math.sqrt(5.0))
    for i in range(n_fill):
        frac = (i + 0.5) / n_fill
        lat = math.acos(1.0 - frac)  # front half only
        lon = golden * i
        x = math.sin(lat) * math.cos(lon)
        y = math.sin(lat) * math.sin(lon)
        z = math.cos(lat)
        pts[_N_SEMANTIC + i] = (
            0.50 + 0.28 * x,
            0.52 + 0.36 * y,
            0.05 - 0.11 * z,
        )
    return CanonicalFaceTemplate(
        points=pts,
        anchor_indices=(_L_EYE.outer, _R_EYE.outer, _NOSE, _CHIN, _TEMPLE_L, _TEMPLE_R),
        left_eye=_L_EYE,
        right_eye=_R_EYE,
    )


def default_template() -> CanonicalFaceTemplate:
    """The template shipped with the package (478 landmarks)."""
    from importlib.resources import files

    path = files("focuswatch").joinpath("data/face_template_478.txt")
    return CanonicalFaceTemplate.load(str(path))

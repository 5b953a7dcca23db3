import numpy as np
import pytest

from focuswatch.errors import DegenerateFace, MalformedHeader, NoFace
from focuswatch.geometry import (
    CanonicalFaceTemplate,
    estimate_gaze,
    estimate_head_pose,
    euler_to_matrix,
    matrix_to_euler,
    make_synthetic_template,
    normalize_landmarks,
)
from focuswatch.types import LandmarkFrame


def frame_of(points, ts=0):
    return LandmarkFrame(ts, np.asarray(points, dtype=float), True)


def rotated(template, rot):
    c = template.points.mean(axis=0)
    return (template.points - c) @ rot.T + c


class TestNormalize:
    def test_interocular_distance_is_one(self, small_template):
        out = normalize_landmarks(frame_of(small_template.points), small_template)
        d = np.linalg.norm(
            out[small_template.left_eye.outer] - out[small_template.right_eye.outer]
        )
        assert abs(d - 1.0) < 1e-12

    def test_translation_invariance(self, small_template):
        base = normalize_landmarks(frame_of(small_template.points), small_template)
        shifted = normalize_landmarks(
            frame_of(small_template.points + np.array([3.0, -2.0, 0.5])), small_template
        )
        assert np.allclose(base, shifted, atol=1e-12)

    def test_scale_invariance(self, small_template):
        base = normalize_landmarks(frame_of(small_template.points), small_template)
        scaled = normalize_landmarks(frame_of(3.0 * small_template.points), small_template)
        assert np.allclose(base, scaled, atol=1e-12)

    def test_no_face(self, small_template):
        with pytest.raises(NoFace):
            normalize_landmarks(LandmarkFrame(0, np.empty((0, 3)), False), small_template)

    def test_degenerate(self, small_template):
        pts = np.zeros_like(small_template.points)
        with pytest.raises(DegenerateFace):
            normalize_landmarks(frame_of(pts), small_template)


class TestHeadPose:
    def test_self_alignment(self, small_template):
        pose = estimate_head_pose(frame_of(small_template.points), small_template)
        assert max(abs(v) for v in pose.as_tuple()) < 1e-9

    def test_yaw_30(self, small_template):
        rot = euler_to_matrix(30.0, 0.0, 0.0)
        pose = estimate_head_pose(frame_of(rotated(small_template, rot)), small_template)
        assert abs(pose.yaw - 30.0) < 1e-6
        assert abs(pose.pitch) < 1e-6 and abs(pose.roll) < 1e-6

    def test_composition(self, small_template):
        r1 = euler_to_matrix(10.0, -5.0, 3.0)
        r2 = euler_to_matrix(-20.0, 8.0, -12.0)
        pose = estimate_head_pose(
            frame_of(rotated(small_template, r2 @ r1)), small_template
        )
        expected = matrix_to_euler(r2 @ r1)
        assert np.allclose(pose.as_tuple(), expected.as_tuple(), atol=1e-6)

    def test_random_rotation_recovery(self, small_template):
        rng = np.random.default_rng(42)
        for _ in range(1000):
            angles = rng.uniform(-60.0, 60.0, size=3)
            rot = euler_to_matrix(*angles)
            pose = estimate_head_pose(frame_of(rotated(small_template, rot)), small_template)
            assert np.allclose(pose.as_tuple(), angles, atol=1e-6)

    def test_no_reflection_under_noise(self, small_template):
        rng = np.random.default_rng(7)
        for _ in range(200):
            angles = rng.uniform(-60.0, 60.0, size=3)
            pts = rotated(small_template, euler_to_matrix(*angles))
            pts = pts + rng.normal(0.0, 0.01, size=pts.shape)
            pose = estimate_head_pose(frame_of(pts), small_template)
            rot = euler_to_matrix(*pose.as_tuple())
            assert np.linalg.det(rot) > 0.99

    def test_collinear_anchors(self, small_template):
        pts = small_template.points.copy()
        for i in small_template.anchor_indices:
            pts[i] = (i * 0.01, i * 0.02, i * 0.03)  # all anchors on one line
        with pytest.raises(DegenerateFace):
            estimate_head_pose(frame_of(pts), small_template)

    def test_gimbal_lock_flag(self, small_template):
        rot = euler_to_matrix(0.0, 90.0, 0.0)
        pose = estimate_head_pose(frame_of(rotated(small_template, rot)), small_template)
        assert pose.gimbal_lock


class TestGaze:
    def test_centered_iris_is_zero(self, small_template):
        pts = small_template.points.copy()
        for eye in (small_template.left_eye, small_template.right_eye):
            pts[eye.iris] = 0.5 * (pts[eye.inner] + pts[eye.outer])
        gaze = estimate_gaze(frame_of(pts), small_template)
        assert abs(gaze[0]) < 1e-12 and abs(gaze[1]) < 1e-12

    def test_quarter_shift_toward_outer(self, small_template):
        pts = small_template.points.copy()
        for eye in (small_template.left_eye, small_template.right_eye):
            inner, outer = pts[eye.inner], pts[eye.outer]
            center = 0.5 * (inner + outer)
            pts[eye.iris] = center + 0.25 * (outer - inner)
        gaze = estimate_gaze(frame_of(pts), small_template)
        assert abs(gaze[0] - 0.5) < 1e-9

    def test_per_eye_averaging(self, small_template):
        pts = small_template.points.copy()
        le, re = small_template.left_eye, small_template.right_eye
        li, lo = pts[le.inner], pts[le.outer]
        pts[le.iris] = 0.5 * (li + lo) + 0.2 * (lo - li)  # gx = +0.4 on one eye
        pts[re.iris] = 0.5 * (pts[re.inner] + pts[re.outer])
        gaze = estimate_gaze(frame_of(pts), small_template)
        assert abs(gaze[0] - 0.2) < 1e-9 and abs(gaze[1]) < 1e-12

    def test_translation_and_scale_invariance(self, small_template):
        pts = small_template.points
        g0 = estimate_gaze(frame_of(pts), small_template)
        g1 = estimate_gaze(frame_of(2.5 * pts + np.array([1.0, 2.0, 3.0])), small_template)
        assert np.allclose(g0, g1, atol=1e-12)

    def test_degenerate_eye(self, small_template):
        pts = small_template.points.copy()
        eye = small_template.left_eye
        pts[eye.outer] = pts[eye.inner]
        with pytest.raises(DegenerateFace):
            estimate_gaze(frame_of(pts), small_template)


class TestTemplateFile:
    def test_roundtrip(self, tmp_path, small_template):
        path = tmp_path / "t.txt"
        small_template.save(path)
        loaded = CanonicalFaceTemplate.load(path)
        assert np.array_equal(loaded.points, small_template.points)
        assert loaded.anchor_indices == small_template.anchor_indices
        assert loaded.left_eye == small_template.left_eye

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("NOTATEMPLATE 1\n")
        with pytest.raises(MalformedHeader):
            CanonicalFaceTemplate.load(path)

    def test_shipped_template(self):
        from focuswatch.geometry import default_template

        t = default_template()
        assert t.landmark_count == 478


def test_euler_roundtrip():
    rng = np.random.default_rng(3)
    for _ in range(500):
        angles = rng.uniform(-89.0, 89.0, size=3)
        pose = matrix_to_euler(euler_to_matrix(*angles))
        assert np.allclose(pose.as_tuple(), angles, atol=1e-9)

import numpy as np
import pytest

from focuswatch import bundle as bundle_mod
from focuswatch import pipeline
from focuswatch.anomaly import FocusWindowConfig
from focuswatch.calibration import GazeMap
from focuswatch.errors import FormatVersionMismatch, MalformedHeader
from focuswatch.synth import SyntheticSessionSpec, generate_session, make_session_meta
from focuswatch.types import LandmarkFrame


@pytest.fixture(scope="module")
def trained(small_template):
    """A 90 s FS session; train on the first 60 s."""
    spec = SyntheticSessionSpec("FS", duration_s=90.0, fps=10.0, seed=0)
    session = generate_session(spec, small_template)
    meta = make_session_meta(spec, small_template)
    mlp = pipeline.default_emotion_model(small_template, epochs=20)
    config = FocusWindowConfig(window_seconds=60, min_frames=100, n_components=6)
    bundle, focus = pipeline.train_from_frames(
        session.frames, meta, small_template, mlp, config
    )
    return session, meta, mlp, bundle, focus


class TestExtract:
    def test_no_face_frame(self, small_template, trained):
        _, _, mlp, _, _ = trained
        wf = pipeline.extract_window_frame(
            LandmarkFrame(5, np.empty((0, 3)), False), small_template, mlp
        )
        assert not wf.face_present
        assert wf.landmark_vec is None and wf.emotion is None

    def test_face_frame_fields(self, small_template, trained):
        session, _, mlp, _, _ = trained
        wf = pipeline.extract_window_frame(session.frames[0], small_template, mlp)
        assert wf.face_present
        assert wf.landmark_vec.shape == (small_template.landmark_count * 3,)
        assert abs(sum(wf.emotion.probabilities) - 1.0) < 1e-9
        assert len(wf.gaze) == 2 and len(wf.head_pose) == 3

    def test_gaze_map_applied(self, small_template, trained):
        session, _, mlp, _, _ = trained
        shift = GazeMap(a=np.eye(2), b=np.array([0.5, 0.5]), rms_residual=0.0, samples_used=9)
        plain = pipeline.extract_window_frame(session.frames[0], small_template, mlp)
        mapped = pipeline.extract_window_frame(
            session.frames[0], small_template, mlp, gaze_map=shift
        )
        assert mapped.gaze[0] == pytest.approx(plain.gaze[0] + 0.5)


class TestTrainFromFrames:
    def test_window_accounting(self, trained):
        _, _, _, _, focus = trained
        assert focus.window_frames == 600  # 60 s at 10 fps
        assert focus.usable_frames == 600
        assert focus.no_face_fraction == 0.0

    def test_bundle_shape(self, trained, small_template):
        _, _, _, bundle, _ = trained
        assert bundle.landmark_count == small_template.landmark_count
        assert bundle.pca.k == 6
        assert len(bundle.ocsvm.alphas) >= 1
        assert bundle.gaze_map is None


class TestScoring:
    def test_in_window_frames_score_low(self, trained, small_template):
        session, meta, _, bundle, _ = trained
        scored = pipeline.score_frames(session.frames[:600], bundle, small_template, meta)
        mean_level = np.mean([s.smoothed_level for s in scored])
        assert mean_level < 0.5

    def test_packet_fields(self, trained, small_template):
        session, meta, _, bundle, _ = trained
        s = pipeline.ScoringSession(bundle, small_template, meta)
        out = s.process(session.frames[0])
        p = out.packet
        assert p.session_id == meta.session_id and p.user_id == meta.user_id
        assert p.timestamp_ms == session.frames[0].timestamp_ms
        assert 0.0 <= p.anomaly_level <= 1.0
        assert p.face_present

    def test_no_face_packet(self, trained, small_template):
        _, meta, _, bundle, _ = trained
        s = pipeline.ScoringSession(bundle, small_template, meta)
        out = s.process(LandmarkFrame(0, np.empty((0, 3)), False))
        assert out.packet.emotion_label == "No-Face"
        assert out.raw_level == 1.0
        assert not out.packet.face_present

    def test_smoothing_carries_state(self, trained, small_template):
        session, meta, _, bundle, _ = trained
        s = pipeline.ScoringSession(bundle, small_template, meta)
        s.process(session.frames[0])
        out = s.process(LandmarkFrame(100, np.empty((0, 3)), False))
        # one no-face frame is damped by the EWMA, not an instant 1.0
        assert out.smoothed_level < 1.0

    def test_landmark_count_mismatch(self, trained, small_template):
        _, meta, _, bundle, _ = trained
        import dataclasses

        bad_meta = dataclasses.replace(meta, landmark_count=meta.landmark_count + 1)
        with pytest.raises(ValueError):
            pipeline.ScoringSession(bundle, small_template, bad_meta)


class TestBundleFile:
    def test_roundtrip_scores_identically(self, trained, small_template, tmp_path):
        session, meta, _, bundle, _ = trained
        path = tmp_path / "model.json"
        bundle_mod.save_bundle(bundle, path)
        loaded = bundle_mod.load_bundle(path)
        a = pipeline.score_frames(session.frames[600:650], bundle, small_template, meta)
        b = pipeline.score_frames(session.frames[600:650], loaded, small_template, meta)
        for x, y in zip(a, b):
            assert x.packet == y.packet

    def test_gaze_map_roundtrip(self, trained, tmp_path):
        _, _, _, bundle, _ = trained
        gm = GazeMap(a=np.array([[0.5, 0.1], [0.0, 0.4]]), b=np.array([0.2, 0.3]),
                     rms_residual=0.01, samples_used=42)
        path = tmp_path / "model.json"
        bundle_mod.save_bundle(bundle.with_gaze_map(gm), path)
        loaded = bundle_mod.load_bundle(path)
        assert np.allclose(loaded.gaze_map.a, gm.a)
        assert loaded.gaze_map.samples_used == 42

    def test_bad_format(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"format": "something-else", "version": 1}')
        with pytest.raises(MalformedHeader):
            bundle_mod.load_bundle(path)

    def test_bad_version(self, trained, tmp_path):
        import json

        _, _, _, bundle, _ = trained
        path = tmp_path / "model.json"
        bundle_mod.save_bundle(bundle, path)
        d = json.loads(path.read_text())
        d["version"] = 999
        path.write_text(json.dumps(d))
        with pytest.raises(FormatVersionMismatch):
            bundle_mod.load_bundle(path)

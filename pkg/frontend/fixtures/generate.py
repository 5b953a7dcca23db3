"""Regenerates the frontend parity fixtures from the engine.

Run from anywhere with the focuswatch package installed:

    python3 frontend/fixtures/generate.py
"""

import json
import pathlib

from focuswatch import streams
from focuswatch.anomaly import FocusWindowConfig
from focuswatch.bundle import save_bundle
from focuswatch.geometry import make_synthetic_template
from focuswatch.pipeline import ScoringSession, default_emotion_model, train_from_frames
from focuswatch.synth import SyntheticSessionSpec, generate_session, make_session_meta

FIXTURES = pathlib.Path(__file__).resolve().parent


def main() -> None:
    template = make_synthetic_template(30)
    spec = SyntheticSessionSpec("FS", duration_s=60.0, fps=10.0, seed=42, no_face_rate=0.02)
    session = generate_session(spec, template)
    meta = make_session_meta(spec, template, session_id="fixture-fs", user_id="fixture-user")
    mlp = default_emotion_model(template, epochs=40)
    cfg = FocusWindowConfig(window_seconds=30, min_frames=100, n_components=6)
    bundle, focus = train_from_frames(session.frames, meta, template, mlp, cfg)
    print(f"usable frames: {focus.usable_frames}, support vectors: {len(bundle.ocsvm.alphas)}")

    streams.write_stream(meta, session.frames, FIXTURES / "stream.fwls")
    save_bundle(bundle, FIXTURES / "bundle.json")
    with open(FIXTURES / "template.json", "w") as fh:
        json.dump(
            {
                "points": template.points.tolist(),
                "anchor_indices": list(template.anchor_indices),
                "left_eye": dict(
                    zip(("inner", "outer", "upper", "lower", "iris"), template.left_eye.as_tuple())
                ),
                "right_eye": dict(
                    zip(("inner", "outer", "upper", "lower", "iris"), template.right_eye.as_tuple())
                ),
            },
            fh,
        )

    scorer = ScoringSession(bundle, template, meta)
    with open(FIXTURES / "expected_packets.jsonl", "w") as fh:
        for frame in session.frames:
            out = scorer.process(frame)
            d = streams.packet_to_dict(out.packet)
            d["raw_level"] = out.raw_level
            fh.write(json.dumps(d, sort_keys=True) + "\n")
    print("fixtures written to", FIXTURES)


if __name__ == "__main__":
    main()

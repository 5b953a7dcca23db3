"""Command-line driver: generate synthetic sessions, train on a focus
window, score streams, replay the full pipeline, and build evaluation
reports. Exit code 0 on success, 1 on validation errors, 2 on internal
errors.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from . import emotion, stats, streams
from .anomaly import FocusWindowConfig, KernelSpec
from .bundle import load_bundle, save_bundle
from .errors import FocusWatchError
from .geometry import CanonicalFaceTemplate, default_template, make_synthetic_template
from .pipeline import ScoringSession, default_emotion_model, train_from_frames
from .synth import SyntheticSessionSpec, generate_session, make_session_meta
from .types import SessionRecord


def _template_from_args(args) -> CanonicalFaceTemplate:
    if getattr(args, "template", None):
        return CanonicalFaceTemplate.load(args.template)
    if getattr(args, "landmark_count", None) and args.landmark_count != 478:
        return make_synthetic_template(args.landmark_count)
    return default_template()


def cmd_generate(args) -> int:
    template = _template_from_args(args)
    spec = SyntheticSessionSpec(
        session_kind=args.kind,
        duration_s=args.duration,
        fps=args.fps,
        seed=args.seed,
        notification_times_s=tuple(args.event) if args.event else None,
    )
    generated = generate_session(spec, template)
    meta = make_session_meta(
        spec, template, session_id=args.session_id, user_id=args.user_id,
        course_type=args.course,
    )
    streams.write_stream(meta, generated.frames, args.out)
    if args.events_out:
        with open(args.events_out, "w") as fh:
            for t, kind in generated.events:
                fh.write(json.dumps({"timestamp_ms": t, "event_kind": kind}) + "\n")
            for iv in generated.intervals:
                fh.write(
                    json.dumps(
                        {
                            "interval": True,
                            "start_ms": iv.start_ms,
                            "end_ms": iv.end_ms,
                            "kind": iv.kind,
                        }
                    )
                    + "\n"
                )
    print(
        f"wrote {len(generated.frames)} frames ({args.kind}, seed {args.seed}) "
        f"to {args.out}"
    )
    return 0


def _emotion_model(args, template):
    if args.emotion_weights:
        return emotion.load_weights(args.emotion_weights)
    return default_emotion_model(template)


def _focus_config(args) -> FocusWindowConfig:
    return FocusWindowConfig(
        window_seconds=args.window_seconds,
        min_frames=args.min_frames,
        nu=args.nu,
        kernel=KernelSpec("rbf", args.gamma),
        n_components=args.k,
        smoothing=args.smoothing,
    )


def cmd_train(args) -> int:
    meta, frames = streams.parse_stream(args.stream)
    template = _template_from_args(args)
    if template.landmark_count != meta.landmark_count:
        template = make_synthetic_template(meta.landmark_count)
    mlp = _emotion_model(args, template)
    bundle, focus = train_from_frames(frames, meta, template, mlp, _focus_config(args))
    save_bundle(bundle, args.out)
    print(
        f"trained on {focus.usable_frames} usable frames "
        f"({focus.window_frames} in window, "
        f"no-face fraction {focus.no_face_fraction:.3f}); "
        f"{len(bundle.ocsvm.alphas)} support vectors; bundle -> {args.out}"
    )
    return 0


def _score_stream(args, write_outputs=True):
    meta, frames = streams.parse_stream(args.stream)
    template = _template_from_args(args)
    if template.landmark_count != meta.landmark_count:
        template = make_synthetic_template(meta.landmark_count)
    bundle = load_bundle(args.bundle)
    session = ScoringSession(bundle, template, meta)
    scored = []
    t0 = time.perf_counter()
    for frame in frames:
        scored.append(session.process(frame))
    elapsed = time.perf_counter() - t0
    events = []
    if getattr(args, "events", None):
        with open(args.events) as fh:
            for line in fh:
                d = json.loads(line)
                if not d.get("interval"):
                    events.append((int(d["timestamp_ms"]), str(d["event_kind"])))
    record = SessionRecord(meta=meta, packets=[s.packet for s in scored], events=events)
    if write_outputs:
        if args.packets_out:
            streams.write_packets([s.packet for s in scored], args.packets_out)
        if args.record_out:
            streams.write_session_record(record, args.record_out)
        if args.focus_log:
            streams.write_focus_log(
                (
                    (
                        s.packet.timestamp_ms,
                        s.raw_level,
                        s.smoothed_level,
                        s.packet.emotion_label,
                        s.packet.face_present,
                    )
                    for s in scored
                ),
                args.focus_log,
            )
    return meta, scored, record, elapsed


def cmd_score(args) -> int:
    meta, scored, record, elapsed = _score_stream(args)
    levels = [s.smoothed_level for s in scored]
    fps = len(scored) / elapsed if elapsed > 0 else float("inf")
    print(
        f"scored {len(scored)} frames of {meta.session_id} "
        f"({fps:.0f} frames/s): mean smoothed anomaly {np.mean(levels):.4f}"
    )
    return 0


def cmd_replay(args) -> int:
    if args.train_window is not None:
        meta, frames = streams.parse_stream(args.stream)
        template = _template_from_args(args)
        if template.landmark_count != meta.landmark_count:
            template = make_synthetic_template(meta.landmark_count)
        mlp = _emotion_model(args, template)
        args.window_seconds = args.train_window
        bundle, focus = train_from_frames(
            frames, meta, template, mlp, _focus_config(args)
        )
        save_bundle(bundle, args.bundle)
        print(
            f"focus-window training: {focus.usable_frames} usable frames in the "
            f"first {args.train_window:.0f} s; bundle -> {args.bundle}"
        )
    meta, scored, record, elapsed = _score_stream(args)
    levels = np.array([s.smoothed_level for s in scored])
    fps = len(scored) / elapsed if elapsed > 0 else float("inf")
    print(
        f"replayed {len(scored)} frames of {meta.session_id} at {fps:.0f} frames/s; "
        f"mean smoothed anomaly {levels.mean():.4f}, "
        f"max {levels.max():.4f}"
    )
    return 0


def cmd_report(args) -> int:
    by_kind: dict[str, list[SessionRecord]] = {}
    for path in args.records:
        rec = streams.read_session_record(path)
        by_kind.setdefault(rec.meta.session_kind, []).append(rec)
    report = stats.session_report(by_kind, alpha=args.alpha)
    print(stats.report_summary_text(report))
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(report, fh, indent=2)
    if args.csv_out:
        with open(args.csv_out, "w") as fh:
            fh.write(stats.report_csv(report))
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(store_dir=args.store)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def _add_common_model_args(p):
    p.add_argument("--template", help="canonical face template file")
    p.add_argument("--landmark-count", type=int, default=478)
    p.add_argument("--emotion-weights", help="externally trained MLP weights file")
    p.add_argument("--window-seconds", type=float, default=600.0)
    p.add_argument("--min-frames", type=int, default=300)
    p.add_argument("--nu", type=float, default=0.1)
    p.add_argument("--gamma", type=float, default=None, help="RBF gamma; default median policy")
    p.add_argument("--k", type=int, default=16, help="PCA components")
    p.add_argument("--smoothing", type=float, default=0.2, help="EWMA lambda")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="focuswatch",
        description="Learner-distraction detection engine over landmark streams.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="generate a synthetic session stream")
    g.add_argument("--kind", choices=("FS", "DAS", "MWS"), default="FS")
    g.add_argument("--duration", type=float, default=600.0)
    g.add_argument("--fps", type=float, default=10.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--event", type=float, action="append",
                   help="DAS notification time in seconds (repeatable)")
    g.add_argument("--session-id")
    g.add_argument("--user-id", default="synth-user")
    g.add_argument("--course", default="video")
    g.add_argument("--template")
    g.add_argument("--landmark-count", type=int, default=478)
    g.add_argument("--out", required=True)
    g.add_argument("--events-out")
    g.set_defaults(func=cmd_generate)

    t = sub.add_parser("train", help="focus-window training -> model bundle")
    t.add_argument("--stream", required=True)
    t.add_argument("--out", required=True)
    _add_common_model_args(t)
    t.set_defaults(func=cmd_train)

    s = sub.add_parser("score", help="score a stream with a trained bundle")
    s.add_argument("--stream", required=True)
    s.add_argument("--bundle", required=True)
    s.add_argument("--events", help="events JSONL from generate")
    s.add_argument("--packets-out")
    s.add_argument("--record-out")
    s.add_argument("--focus-log")
    s.add_argument("--template")
    s.add_argument("--landmark-count", type=int, default=478)
    s.set_defaults(func=cmd_score)

    r = sub.add_parser("replay", help="full pipeline: optional training, then scoring")
    r.add_argument("--stream", required=True)
    r.add_argument("--bundle", required=True,
                   help="bundle path (written when --train-window is given)")
    r.add_argument("--train-window", type=float,
                   help="train a new bundle on the first N seconds")
    r.add_argument("--events")
    r.add_argument("--packets-out")
    r.add_argument("--record-out")
    r.add_argument("--focus-log")
    _add_common_model_args(r)
    r.set_defaults(func=cmd_replay)

    rp = sub.add_parser("report", help="evaluation statistics over session records")
    rp.add_argument("records", nargs="+")
    rp.add_argument("--alpha", type=float, default=0.05)
    rp.add_argument("--out")
    rp.add_argument("--csv-out")
    rp.set_defaults(func=cmd_report)

    sv = sub.add_parser("serve", help="run the metrics ingestion service")
    sv.add_argument("--host", default="127.0.0.1")
    sv.add_argument("--port", type=int, default=8470)
    sv.add_argument("--store", default="focuswatch-store")
    sv.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FocusWatchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"internal error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

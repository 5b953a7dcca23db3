"""Acceptance suite: one test per acceptance criterion, each emitting a
single PASS/FAIL line with its measured quantity. The synthetic-protocol
criteria run the full-scale configuration (478 landmarks, 600 s at 10 fps,
10 seeds), so this module is slower than the unit suites.
"""

import math
import sys
import threading
import time

import numpy as np
import pytest
from scipy import integrate

from focuswatch import anomaly, dimreduce, emotion, stats
from focuswatch.anomaly import KernelSpec, kernel_matrix, train_ocsvm
from focuswatch.calibration import CalibrationPlan, run_calibration
from focuswatch.geometry import estimate_head_pose, euler_to_matrix
from focuswatch.pipeline import default_emotion_model, score_frames, train_from_frames
from focuswatch.synth import SyntheticSessionSpec, generate_session, make_session_meta
from focuswatch.types import LandmarkFrame, SessionRecord

from test_anomaly import brute_force_ocsvm
from test_calibration import synth_samples
from test_dimreduce import jacobi_eigh


# One line per criterion; the conftest terminal-summary hook replays these
# after the run so they survive pytest's output capture.
REPORT_LINES: list[str] = []


def report(name, ok, detail=""):
    tag = "PASS" if ok else "FAIL"
    line = f"[acceptance] {tag}: {name}" + (f" -- {detail}" if detail else "")
    REPORT_LINES.append(line)
    print(line, flush=True)
    assert ok, line


# ---------------------------------------------------------------------------
# Full-scale synthetic experiment, shared across the protocol criteria
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def experiment(full_template):
    mlp = default_emotion_model(full_template)
    per_seed = []
    keep = {}
    for seed in range(1, 11):
        levels = {}
        das_record = None
        fs_spec = SyntheticSessionSpec("FS", seed=seed)
        fs = generate_session(fs_spec, full_template)
        meta_fs = make_session_meta(fs_spec, full_template, session_id=f"fs-{seed}")
        bundle, _ = train_from_frames(fs.frames, meta_fs, full_template, mlp)
        for kind in ("FS", "DAS", "MWS"):
            if kind == "FS":
                session, meta = fs, meta_fs
            else:
                spec = SyntheticSessionSpec(kind, seed=seed)
                session = generate_session(spec, full_template)
                meta = make_session_meta(spec, full_template, session_id=f"{kind.lower()}-{seed}")
            scored = score_frames(session.frames, bundle, full_template, meta)
            levels[kind] = np.array([s.smoothed_level for s in scored])
            if kind == "DAS":
                das_record = SessionRecord(
                    meta=meta,
                    packets=tuple(s.packet for s in scored),
                    events=tuple(session.events),
                )
        anova = stats.one_way_anova([levels["FS"], levels["DAS"], levels["MWS"]])
        per_seed.append(
            {
                "seed": seed,
                "means": {k: float(v.mean()) for k, v in levels.items()},
                "anova_p": anova.p_value,
                "event_locked": stats.event_locked_means(das_record),
            }
        )
        if seed == 1:
            keep = {"bundle": bundle, "frames": fs.frames, "meta": meta_fs}
    return {"per_seed": per_seed, **keep}


class TestOneClassSvm:
    def test_smo_matches_brute_force_oracle(self):
        rng = np.random.default_rng(20)
        worst_alpha = worst_rho = worst_obj = 0.0
        for trial in range(50):
            n = int(rng.integers(2, 7))
            x = rng.normal(size=(n, 2))
            nu = float(rng.uniform(max(1.5 / n, 0.3), 1.0))
            spec = KernelSpec("rbf", float(rng.uniform(0.2, 2.0)))
            model = train_ocsvm(x, nu=nu, kernel=spec)
            k = kernel_matrix(model.kernel, x, x)
            alpha_star, rho_star, obj_star = brute_force_ocsvm(k, 1.0 / (nu * n))
            alpha_full = np.zeros(n)
            sv = 0
            for i in range(n):
                if sv < len(model.alphas) and np.allclose(x[i], model.support_vectors[sv]):
                    alpha_full[i] = model.alphas[sv]
                    sv += 1
            worst_alpha = max(worst_alpha, float(np.max(np.abs(alpha_full - alpha_star))))
            worst_rho = max(worst_rho, abs(model.rho - rho_star))
            worst_obj = max(worst_obj, abs(0.5 * alpha_full @ k @ alpha_full - obj_star))
        ok = worst_alpha < 1e-4 and worst_rho < 1e-4 and worst_obj < 1e-8
        report(
            "OC-SVM vs brute-force QP oracle (50 instances, l <= 6)", ok,
            f"max |dalpha| {worst_alpha:.2e}, |drho| {worst_rho:.2e}, |dobj| {worst_obj:.2e}",
        )

    def test_nu_property(self):
        t0 = time.perf_counter()
        summary = []
        ok = True
        for nu in (0.05, 0.1, 0.3):
            hits = 0
            for seed in range(10):
                rng = np.random.default_rng(seed)
                x = rng.normal(size=(500, 2))
                model = train_ocsvm(x, nu=nu)
                outlier_frac = float((anomaly.decision_values(model, x) < 0).mean())
                sv_frac = len(model.alphas) / 500
                if outlier_frac <= nu + 0.03 and sv_frac >= nu - 0.03:
                    hits += 1
            summary.append(f"nu={nu}: {hits}/10")
            ok = ok and hits >= 9
        elapsed = time.perf_counter() - t0
        ok = ok and elapsed < 60.0
        report(
            "nu-property (nu in {0.05, 0.1, 0.3}, l = 500, 10 seeds, < 60 s)", ok,
            f"{', '.join(summary)}; {elapsed:.1f} s",
        )


class TestProtocol:
    def test_session_ordering_and_anova(self, experiment):
        rows = experiment["per_seed"]
        ordered = sum(
            1 for r in rows
            if r["means"]["FS"] < r["means"]["DAS"] and r["means"]["FS"] < r["means"]["MWS"]
        )
        significant = sum(1 for r in rows if r["anova_p"] < 0.05)
        ok = ordered >= 9 and significant >= 9
        means = rows[0]["means"]
        report(
            "FS < DAS and FS < MWS mean anomaly, ANOVA p < 0.05 (10 seeds)", ok,
            f"ordering {ordered}/10, significant {significant}/10; seed-1 means "
            f"FS {means['FS']:.3f} / DAS {means['DAS']:.3f} / MWS {means['MWS']:.3f}",
        )

    def test_event_locked_rise(self, experiment):
        above = total = 0
        for r in experiment["per_seed"]:
            for e in r["event_locked"]:
                total += 1
                above += int(e["above_baseline"])
        ok = total > 0 and above / total >= 0.9
        report(
            "DAS event-locked rise within 2 s of notification (>= 90% of events)", ok,
            f"{above}/{total} events above session baseline",
        )


class TestStatistics:
    def test_oracles(self):
        f_res = stats.one_way_anova([[1, 2, 3], [2, 3, 4], [3, 4, 5]])
        chi_res = stats.chi_squared_frequency([[10, 20], [20, 10]])

        def f_density(t, df1, df2):
            h1, h2 = df1 / 2.0, df2 / 2.0
            ln = (math.lgamma(h1 + h2) - math.lgamma(h1) - math.lgamma(h2)
                  + h1 * math.log(df1 / df2))
            return math.exp(ln + (h1 - 1) * math.log(t) - (h1 + h2) * math.log1p(df1 * t / df2))

        f_tail, _ = integrate.quad(lambda t: f_density(t, 2, 6), f_res.f_statistic, np.inf)
        chi_tail, _ = integrate.quad(
            lambda t: math.exp(-t / 2 - 0.5 * math.log(t) - 0.5 * math.log(2)
                               - math.lgamma(0.5)),
            chi_res.statistic, np.inf,
        )
        checks = {
            "F": abs(f_res.f_statistic - 3.0) < 1e-9,
            "chi2": abs(chi_res.statistic - 6.666667) < 1e-5,
            "p_F": abs(f_res.p_value - f_tail) < 1e-6,
            "p_chi2": abs(chi_res.p_value - chi_tail) < 1e-6,
            "SUS": stats.sus_score([3] * 10) == 50.0,
        }
        report(
            "statistics oracles (F = 3.0, chi2 = 6.666667, p vs quadrature, SUS = 50)",
            all(checks.values()),
            f"F {f_res.f_statistic:.10f}, chi2 {chi_res.statistic:.6f}, "
            f"p_F err {abs(f_res.p_value - f_tail):.1e}, "
            f"p_chi2 err {abs(chi_res.p_value - chi_tail):.1e}",
        )


class TestGeometry:
    def test_head_pose_recovery(self, full_template):
        rng = np.random.default_rng(11)
        centroid = full_template.points.mean(axis=0)
        worst = 0.0
        for _ in range(1000):
            angles = rng.uniform(-60.0, 60.0, size=3)
            rot = euler_to_matrix(*angles)
            pts = (full_template.points - centroid) @ rot.T + centroid
            pose = estimate_head_pose(LandmarkFrame(0, pts, True), full_template)
            worst = max(worst, float(np.max(np.abs(np.array(pose.as_tuple()) - angles))))
        ok = worst < 1e-6
        report("head-pose recovery, 1000 random rotations (1e-6 deg)", ok,
               f"max error {worst:.2e} deg")

    def test_pca_matches_eigensolver(self):
        rng = np.random.default_rng(12)
        x = rng.normal(size=(80, 8)) * np.geomspace(3.0, 0.2, 8)
        model = dimreduce.fit(x, 8)
        centered = x - x.mean(axis=0)
        vals, vecs = jacobi_eigh(centered.T @ centered / (len(x) - 1))
        worst = 0.0
        for i in range(8):
            v = vecs[:, i]
            if v[np.argmax(np.abs(v))] < 0:
                v = -v
            worst = max(worst, float(np.max(np.abs(model.components[i] - v))))
        ratio_err = float(np.max(np.abs(model.explained_variance_ratio - vals / vals.sum())))
        ok = worst < 1e-8 and ratio_err < 1e-8
        report("PCA vs dense Jacobi eigensolver oracle (1e-8)", ok,
               f"component err {worst:.1e}, variance-ratio err {ratio_err:.1e}")


class TestEmotion:
    def test_gradients_and_clusters(self, small_template):
        rng = np.random.default_rng(13)
        x = rng.normal(size=(5, 7))
        y = np.array([0, 4, 10, 2, 7])
        model = emotion.MlpModel(
            w1=rng.normal(0, 0.5, size=(6, 7)), b1=rng.normal(0, 0.5, size=6),
            w2=rng.normal(0, 0.5, size=(11, 6)), b2=rng.normal(0, 0.5, size=11),
        )
        _, grads = emotion._loss_and_grads(model, x, y)
        eps = 1e-5
        worst = 0.0
        for pname, grad in zip(("w1", "b1", "w2", "b2"), grads):
            base = np.array(getattr(model, pname))
            for idx in np.ndindex(base.shape):
                vals = []
                for sign in (1, -1):
                    p = base.copy()
                    p[idx] += sign * eps
                    m = emotion.MlpModel(**{
                        n: (p if n == pname else getattr(model, n))
                        for n in ("w1", "b1", "w2", "b2")
                    })
                    vals.append(emotion._loss_and_grads(m, x, y)[0])
                num = (vals[0] - vals[1]) / (2 * eps)
                denom = max(abs(num), abs(grad[idx]), 1e-8)
                worst = max(worst, abs(num - grad[idx]) / denom)

        xs, ys = emotion.make_surrogate_dataset(
            small_template, classes=(0, 1, 2), per_class=40, seed=14
        )
        trained, _ = emotion.train(xs, ys, epochs=200, learning_rate=0.5, seed=0)
        acc = float((np.argmax(emotion.infer_batch(trained, xs), axis=1) == ys).mean())
        ok = worst < 1e-4 and acc >= 0.95
        report("emotion MLP: gradient check < 1e-4, 3-cluster accuracy >= 95%", ok,
               f"max grad rel err {worst:.1e}, accuracy {acc:.3f}")


class TestCalibration:
    def test_noiseless_and_noisy(self):
        plan = CalibrationPlan()
        a_true = np.array([[0.45, 0.03], [-0.02, 0.40]])
        b_true = np.array([0.52, 0.48])
        clean = run_calibration(plan, synth_samples(plan, a_true, b_true))
        clean_err = max(
            float(np.max(np.abs(clean.a - a_true))), float(np.max(np.abs(clean.b - b_true)))
        )

        sigma = 0.01
        worst_target = 0.0
        for seed in range(20):
            m = run_calibration(plan, synth_samples(plan, a_true, b_true, noise=sigma, seed=seed))
            ainv = np.linalg.inv(a_true)
            for target in plan.targets:
                raw = ainv @ (np.asarray(target) - b_true)
                mapped = m.a @ raw + m.b
                worst_target = max(worst_target, float(np.max(np.abs(mapped - target))))
        ok = clean_err < 1e-9 and worst_target <= 3 * sigma
        report(
            "gaze calibration: noiseless 1e-9, noisy per-target <= 3 sigma (20 seeds)", ok,
            f"noiseless err {clean_err:.1e}, worst noisy target err {worst_target:.4f} "
            f"(limit {3 * sigma})",
        )


class TestThroughput:
    def test_replay_at_least_30_fps(self, experiment, full_template):
        frames = experiment["frames"]
        t0 = time.perf_counter()
        scored = score_frames(frames, experiment["bundle"], full_template, experiment["meta"])
        elapsed = time.perf_counter() - t0
        fps = len(scored) / elapsed
        ok = fps >= 30.0
        report("pipeline throughput >= 30 frames/s (default config, 478 landmarks)", ok,
               f"{fps:.0f} frames/s over {len(scored)} frames")


class TestServiceLoad:
    def test_fifteen_students_load(self, tmp_path):
        import json

        from fastapi.testclient import TestClient

        from focuswatch.service import create_app
        from focuswatch.streams import meta_to_dict, packet_to_dict
        from focuswatch.types import MetricPacket, SessionMeta

        n_students, pps, seconds = 15, 10, 60
        tokens = {"tok-teacher": {"role": "teacher", "class_id": "c1"}}
        for i in range(n_students):
            tokens[f"tok-{i}"] = {"role": "student", "user_id": f"u{i}", "class_id": "c1"}
        store = str(tmp_path / "store")
        app = create_app(store_dir=store, tokens=tokens)

        with TestClient(app) as client:
            for i in range(n_students):
                meta = SessionMeta(f"s{i}", f"u{i}", "lecture", "LIVE", "t", 478)
                r = client.post("/sessions", json={"meta": meta_to_dict(meta)},
                                headers={"Authorization": f"Bearer tok-{i}"})
                assert r.status_code == 200

            def send(i, errors):
                rng = np.random.default_rng(i)
                timestamps = [int(j * 1000 / pps) for j in range(pps * seconds)]
                # shuffle inside 2 s blocks: arrival jitter the 5 s reorder
                # buffer must absorb
                for b in range(0, len(timestamps), 2 * pps):
                    block = timestamps[b:b + 2 * pps]
                    rng.shuffle(block)
                    timestamps[b:b + 2 * pps] = block
                with client.websocket_connect(f"/stream?token=tok-{i}") as ws:
                    for ts in timestamps:
                        p = MetricPacket(f"s{i}", f"u{i}", ts, "Neutral", 0.25, True)
                        ws.send_text(json.dumps(packet_to_dict(p)))
                        ack = ws.receive_json()
                        if "ack" not in ack:
                            errors.append((i, ts, ack))

            errors = []
            threads = [
                threading.Thread(target=send, args=(i, errors)) for i in range(n_students)
            ]
            t0 = time.perf_counter()
            for t in threads:
                t.start()
            for t in threads:
                t.join()
            ingest_elapsed = time.perf_counter() - t0

            t0 = time.perf_counter()
            r = client.get("/classes/c1/dashboard",
                           headers={"Authorization": "Bearer tok-teacher"})
            snapshot_elapsed = time.perf_counter() - t0
            students = {s["user_id"]: s for s in r.json()["students"]}
            counts_ok = all(
                students[f"u{i}"]["packet_count"] == pps * seconds for i in range(n_students)
            )

        # restart: same store, fresh process state
        app2 = create_app(store_dir=store, tokens=tokens)
        with TestClient(app2) as client2:
            durable_ok = True
            for i in range(n_students):
                r = client2.get(f"/logs/u{i}/s{i}",
                                headers={"Authorization": f"Bearer tok-{i}"})
                packets = r.json()["packets"]
                ts = [p["timestamp_ms"] for p in packets]
                if len(ts) != pps * seconds or ts != sorted(ts) or len(set(ts)) != len(ts):
                    durable_ok = False

        ok = not errors and counts_ok and snapshot_elapsed <= 1.0 and durable_ok
        report(
            "service load: 15 students x 10 pkt/s x 60 s, zero loss, snapshot <= 1 s, "
            "durable restart", ok,
            f"{n_students * pps * seconds} packets in {ingest_elapsed:.1f} s, "
            f"{len(errors)} rejected, snapshot {snapshot_elapsed * 1000:.0f} ms, "
            f"durable={durable_ok}",
        )

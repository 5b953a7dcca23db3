import { describe, expect, it } from "vitest";

import { CalibrationWizard, defaultGridPlan, fitGazeMap } from "../src/calibration";
import { applyGazeMap } from "../src/scoring";

// Known ground-truth map: screen = A @ gaze + b.
const A = [
  [1.4, 0.12],
  [-0.08, 1.25],
];
const B = [0.05, -0.03];

/** Raw gaze that would produce the given screen point: gaze = A^-1 (s - b). */
function inverseGaze(s: [number, number]): [number, number] {
  const det = A[0][0] * A[1][1] - A[0][1] * A[1][0];
  const dx = s[0] - B[0];
  const dy = s[1] - B[1];
  return [(A[1][1] * dx - A[0][1] * dy) / det, (-A[1][0] * dx + A[0][0] * dy) / det];
}

/** Drives the wizard through a full synthetic playback: samples every
 * 50 ms across settle + dwell per target, in plan order. */
function playback(wizard: CalibrationWizard, stopAfterTargets = Infinity): void {
  wizard.start();
  let ts = 0;
  let shown = 0;
  for (;;) {
    const target = wizard.currentTarget as [number, number];
    const gaze = inverseGaze(target);
    const onset = ts;
    for (; ts < onset + wizard.plan.settleMs + wizard.plan.dwellMs; ts += 50) {
      // during settle the eye is still travelling; feed junk there
      const settled = ts >= onset + wizard.plan.settleMs;
      wizard.addSample(ts, settled ? gaze : [9.0, -9.0]);
    }
    shown += 1;
    if (shown >= stopAfterTargets) return;
    if (!wizard.advance()) return;
  }
}

describe("calibration wizard", () => {
  it("completes the 9-target plan and recovers the affine map", () => {
    const wizard = new CalibrationWizard(defaultGridPlan());
    expect(wizard.plan.targets.length).toBe(9);
    playback(wizard);
    const map = wizard.finish();
    expect(wizard.state).toBe("done");
    for (let r = 0; r < 2; r++) {
      for (let c = 0; c < 2; c++) {
        expect(Math.abs(map.a[r][c] - A[r][c])).toBeLessThanOrEqual(1e-6);
      }
      expect(Math.abs(map.b[r] - B[r])).toBeLessThanOrEqual(1e-6);
    }
    expect(map.rmsResidual).toBeLessThanOrEqual(1e-6);
    expect(map.samplesUsed).toBeGreaterThan(0);
  });

  it("presents targets in plan order", () => {
    const wizard = new CalibrationWizard(defaultGridPlan());
    wizard.start();
    const seen: [number, number][] = [];
    do {
      seen.push(wizard.currentTarget as [number, number]);
    } while (wizard.advance());
    expect(seen).toEqual(wizard.plan.targets);
  });

  it("abandoning midway discards samples and stores no map", () => {
    const wizard = new CalibrationWizard(defaultGridPlan());
    playback(wizard, 4);
    wizard.abandon();
    expect(wizard.state).toBe("abandoned");
    expect(wizard.result).toBeNull();
    expect(() => wizard.finish()).toThrow(/not running/);
  });

  it("rejects a run with too few usable targets", () => {
    const wizard = new CalibrationWizard(defaultGridPlan());
    playback(wizard, 2);
    expect(() => wizard.finish()).toThrow(/usable targets/);
  });

  it("drops no-face samples and everything inside the settle window", () => {
    const plan = defaultGridPlan();
    const samples = [];
    let ts = 0;
    for (let idx = 0; idx < plan.targets.length; idx++) {
      const gaze = inverseGaze(plan.targets[idx]);
      const onset = ts;
      for (; ts < onset + plan.settleMs + plan.dwellMs; ts += 50) {
        const settled = ts >= onset + plan.settleMs;
        // interleave no-face dropouts with clean dwell samples
        const dropout = settled && ts % 200 === 0;
        samples.push({
          timestampMs: ts,
          targetIndex: idx,
          gaze: dropout ? null : settled ? gaze : ([5.0, 5.0] as [number, number]),
        });
      }
    }
    const map = fitGazeMap(plan, samples);
    expect(Math.abs(map.a[0][0] - A[0][0])).toBeLessThanOrEqual(1e-6);
    expect(Math.abs(map.b[1] - B[1])).toBeLessThanOrEqual(1e-6);
  });

  it("applies the fitted map with clamping to [-0.5, 1.5]", () => {
    const wizard = new CalibrationWizard(defaultGridPlan());
    playback(wizard);
    const map = wizard.finish();
    const center = applyGazeMap(map, inverseGaze([0.5, 0.5]));
    expect(Math.abs(center[0] - 0.5)).toBeLessThanOrEqual(1e-6);
    expect(Math.abs(center[1] - 0.5)).toBeLessThanOrEqual(1e-6);
    const wild = applyGazeMap(map, [50, -50]);
    expect(wild[0]).toBeGreaterThanOrEqual(-0.5);
    expect(wild[0]).toBeLessThanOrEqual(1.5);
  });
});

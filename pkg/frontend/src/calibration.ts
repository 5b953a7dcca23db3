/** Gaze-calibration wizard: walks the user through a sequence of
 * on-screen targets, collects dwell-averaged raw gaze per target, and
 * fits an affine raw-gaze -> screen map by ordinary least squares. The
 * fit mirrors the engine's: first `settleMs` after target onset is
 * discarded, no-face samples are dropped, onset is the earliest sample
 * timestamp per target. */

import { GazeMapData } from "./bundle";

export interface CalibrationPlan {
  targets: [number, number][];
  dwellMs: number;
  settleMs: number;
}

export function defaultGridPlan(): CalibrationPlan {
  const coords = [0.1, 0.5, 0.9];
  const targets: [number, number][] = [];
  for (const v of coords) for (const u of coords) targets.push([u, v]);
  return { targets, dwellMs: 1500, settleMs: 500 };
}

export interface GazeSample {
  timestampMs: number;
  targetIndex: number;
  gaze: [number, number] | null; // null = no face, dropped
}

const COLLINEARITY_TOL = 1e-9;

function collinear(points: [number, number][]): boolean {
  const n = points.length;
  let mx = 0;
  let my = 0;
  for (const [x, y] of points) {
    mx += x / n;
    my += y / n;
  }
  // singular values of the centered n x 2 matrix via its 2x2 Gram matrix
  let sxx = 0;
  let sxy = 0;
  let syy = 0;
  for (const [x, y] of points) {
    const cx = x - mx;
    const cy = y - my;
    sxx += cx * cx;
    sxy += cx * cy;
    syy += cy * cy;
  }
  const tr = sxx + syy;
  const det = sxx * syy - sxy * sxy;
  const disc = Math.sqrt(Math.max(tr * tr - 4 * det, 0));
  const s0 = Math.sqrt(Math.max((tr + disc) / 2, 0));
  const s1 = Math.sqrt(Math.max((tr - disc) / 2, 0));
  return s1 < COLLINEARITY_TOL * Math.max(s0, COLLINEARITY_TOL);
}

/** Solves the 3x3 system m x = rhs by Gaussian elimination with partial
 * pivoting. */
function solve3(m: number[][], rhs: number[]): number[] {
  const a = m.map((row, i) => [...row, rhs[i]]);
  for (let col = 0; col < 3; col++) {
    let piv = col;
    for (let r = col + 1; r < 3; r++) {
      if (Math.abs(a[r][col]) > Math.abs(a[piv][col])) piv = r;
    }
    if (Math.abs(a[piv][col]) < 1e-300) throw new Error("calibration system is singular");
    [a[col], a[piv]] = [a[piv], a[col]];
    for (let r = 0; r < 3; r++) {
      if (r === col) continue;
      const factor = a[r][col] / a[col][col];
      for (let c = col; c < 4; c++) a[r][c] -= factor * a[col][c];
    }
  }
  return [a[0][3] / a[0][0], a[1][3] / a[1][1], a[2][3] / a[2][2]];
}

export function fitGazeMap(plan: CalibrationPlan, samples: GazeSample[]): GazeMapData {
  const perTarget = new Map<number, GazeSample[]>();
  for (const s of samples) {
    const batch = perTarget.get(s.targetIndex);
    if (batch) batch.push(s);
    else perTarget.set(s.targetIndex, [s]);
  }

  const means: [number, number][] = [];
  const screens: [number, number][] = [];
  let used = 0;
  for (let idx = 0; idx < plan.targets.length; idx++) {
    const batch = perTarget.get(idx);
    if (!batch || batch.length === 0) continue;
    const onset = Math.min(...batch.map((s) => s.timestampMs));
    const kept = batch
      .filter((s) => s.gaze !== null && s.timestampMs >= onset + plan.settleMs)
      .map((s) => s.gaze as [number, number]);
    if (kept.length === 0) continue;
    let gx = 0;
    let gy = 0;
    for (const [x, y] of kept) {
      gx += x / kept.length;
      gy += y / kept.length;
    }
    means.push([gx, gy]);
    screens.push(plan.targets[idx]);
    used += kept.length;
  }

  if (means.length < 3 || collinear(screens)) {
    throw new Error(`only ${means.length} usable targets; need >= 3, non-collinear`);
  }

  // OLS on rows [gx, gy, 1] via the 3x3 normal equations, per screen axis.
  const gram = [
    [0, 0, 0],
    [0, 0, 0],
    [0, 0, 0],
  ];
  const rhs: number[][] = [
    [0, 0, 0],
    [0, 0, 0],
  ];
  for (let i = 0; i < means.length; i++) {
    const row = [means[i][0], means[i][1], 1];
    for (let r = 0; r < 3; r++) {
      for (let c = 0; c < 3; c++) gram[r][c] += row[r] * row[c];
      rhs[0][r] += row[r] * screens[i][0];
      rhs[1][r] += row[r] * screens[i][1];
    }
  }
  const cx = solve3(gram, rhs[0]); // [a00, a01, b0]
  const cy = solve3(gram, rhs[1]); // [a10, a11, b1]

  let sq = 0;
  for (let i = 0; i < means.length; i++) {
    const px = cx[0] * means[i][0] + cx[1] * means[i][1] + cx[2];
    const py = cy[0] * means[i][0] + cy[1] * means[i][1] + cy[2];
    sq += (screens[i][0] - px) ** 2 + (screens[i][1] - py) ** 2;
  }
  return {
    a: [
      [cx[0], cx[1]],
      [cy[0], cy[1]],
    ],
    b: [cx[2], cy[2]],
    rmsResidual: Math.sqrt(sq / means.length),
    samplesUsed: used,
  };
}

export type WizardState = "idle" | "running" | "done" | "abandoned";

/** Presents targets in plan order and accumulates samples; `finish` fits
 * the map, `abandon` discards everything collected. */
export class CalibrationWizard {
  private samples: GazeSample[] = [];
  private targetIndex = 0;
  private _state: WizardState = "idle";
  private _result: GazeMapData | null = null;

  constructor(readonly plan: CalibrationPlan = defaultGridPlan()) {}

  get state(): WizardState {
    return this._state;
  }

  /** Map from the last completed run, or null if none finished. */
  get result(): GazeMapData | null {
    return this._result;
  }

  get currentTarget(): [number, number] | null {
    if (this._state !== "running") return null;
    return this.plan.targets[this.targetIndex];
  }

  get currentTargetIndex(): number {
    return this.targetIndex;
  }

  start(): void {
    this.samples = [];
    this.targetIndex = 0;
    this._state = "running";
  }

  addSample(timestampMs: number, gaze: [number, number] | null): void {
    if (this._state !== "running") throw new Error("wizard is not running");
    this.samples.push({ timestampMs, targetIndex: this.targetIndex, gaze });
  }

  /** Moves to the next target; returns false once all targets are shown. */
  advance(): boolean {
    if (this._state !== "running") throw new Error("wizard is not running");
    if (this.targetIndex + 1 >= this.plan.targets.length) return false;
    this.targetIndex += 1;
    return true;
  }

  abandon(): void {
    if (this._state !== "running") throw new Error("wizard is not running");
    this.samples = [];
    this._state = "abandoned";
  }

  finish(): GazeMapData {
    if (this._state !== "running") throw new Error("wizard is not running");
    const map = fitGazeMap(this.plan, this.samples);
    this._result = map;
    this._state = "done";
    return map;
  }
}

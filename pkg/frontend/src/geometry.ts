/** Geometric features from a landmark frame: normalized landmarks, head
 * pose via an orthogonal Procrustes fit over rigid anchor landmarks, and
 * the eye-gaze offset vector. Mirrors the engine's algorithms so a shared
 * model bundle scores identically on both sides. */

export interface EyeIndices {
  inner: number;
  outer: number;
  upper: number;
  lower: number;
  iris: number;
}

export interface FaceTemplate {
  points: Float64Array; // flat (count * 3)
  count: number;
  anchorIndices: number[];
  leftEye: EyeIndices;
  rightEye: EyeIndices;
}

export interface HeadPose {
  yaw: number;
  pitch: number;
  roll: number;
  gimbalLock: boolean;
}

const GIMBAL_LOCK_DEG = 89.999;

export function parseTemplate(d: {
  points: number[][];
  anchor_indices: number[];
  left_eye: EyeIndices;
  right_eye: EyeIndices;
}): FaceTemplate {
  const count = d.points.length;
  const points = new Float64Array(count * 3);
  for (let i = 0; i < count; i++) {
    points[3 * i] = d.points[i][0];
    points[3 * i + 1] = d.points[i][1];
    points[3 * i + 2] = d.points[i][2];
  }
  return {
    points,
    count,
    anchorIndices: [...d.anchor_indices],
    leftEye: { ...d.left_eye },
    rightEye: { ...d.right_eye },
  };
}

function centroid(points: Float64Array): [number, number, number] {
  const n = points.length / 3;
  let cx = 0;
  let cy = 0;
  let cz = 0;
  for (let i = 0; i < n; i++) {
    cx += points[3 * i];
    cy += points[3 * i + 1];
    cz += points[3 * i + 2];
  }
  return [cx / n, cy / n, cz / n];
}

function pointAt(points: Float64Array, i: number): [number, number, number] {
  return [points[3 * i], points[3 * i + 1], points[3 * i + 2]];
}

function dist3(a: [number, number, number], b: [number, number, number]): number {
  return Math.hypot(a[0] - b[0], a[1] - b[1], a[2] - b[2]);
}

/** Centers on the centroid and scales so the outer-corner inter-ocular
 * distance is 1. */
export function normalizeLandmarks(points: Float64Array, template: FaceTemplate): Float64Array {
  const [cx, cy, cz] = centroid(points);
  const out = new Float64Array(points.length);
  for (let i = 0; i < points.length / 3; i++) {
    out[3 * i] = points[3 * i] - cx;
    out[3 * i + 1] = points[3 * i + 1] - cy;
    out[3 * i + 2] = points[3 * i + 2] - cz;
  }
  const iod = dist3(pointAt(out, template.leftEye.outer), pointAt(out, template.rightEye.outer));
  if (iod < 1e-9) throw new Error("degenerate face: inter-ocular distance below 1e-9");
  for (let i = 0; i < out.length; i++) out[i] /= iod;
  return out;
}

type Mat3 = number[][];

function matMul(a: Mat3, b: Mat3): Mat3 {
  const out: Mat3 = [
    [0, 0, 0],
    [0, 0, 0],
    [0, 0, 0],
  ];
  for (let i = 0; i < 3; i++)
    for (let j = 0; j < 3; j++)
      for (let k = 0; k < 3; k++) out[i][j] += a[i][k] * b[k][j];
  return out;
}

function det3(m: Mat3): number {
  return (
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
    m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
    m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
  );
}

/** One-sided Jacobi SVD of a 3x3 matrix: a = u * diag(s) * v^T with
 * singular values sorted descending. */
export function svd3(a: Mat3): { u: Mat3; s: number[]; v: Mat3 } {
  const w: Mat3 = a.map((row) => [...row]);
  const v: Mat3 = [
    [1, 0, 0],
    [0, 1, 0],
    [0, 0, 1],
  ];
  for (let sweep = 0; sweep < 60; sweep++) {
    let off = 0;
    for (let p = 0; p < 2; p++) {
      for (let q = p + 1; q < 3; q++) {
        let app = 0;
        let aqq = 0;
        let apq = 0;
        for (let k = 0; k < 3; k++) {
          app += w[k][p] * w[k][p];
          aqq += w[k][q] * w[k][q];
          apq += w[k][p] * w[k][q];
        }
        const denom = Math.sqrt(app * aqq);
        if (denom > 0) off = Math.max(off, Math.abs(apq) / denom);
        if (Math.abs(apq) <= 1e-16 * denom) continue;
        const zeta = (aqq - app) / (2 * apq);
        const t = Math.sign(zeta || 1) / (Math.abs(zeta) + Math.sqrt(1 + zeta * zeta));
        const c = 1 / Math.sqrt(1 + t * t);
        const s = c * t;
        for (let k = 0; k < 3; k++) {
          const wp = w[k][p];
          const wq = w[k][q];
          w[k][p] = c * wp - s * wq;
          w[k][q] = s * wp + c * wq;
          const vp = v[k][p];
          const vq = v[k][q];
          v[k][p] = c * vp - s * vq;
          v[k][q] = s * vp + c * vq;
        }
      }
    }
    if (off < 1e-15) break;
  }
  const s = [0, 0, 0];
  const u: Mat3 = [
    [0, 0, 0],
    [0, 0, 0],
    [0, 0, 0],
  ];
  for (let j = 0; j < 3; j++) {
    s[j] = Math.hypot(w[0][j], w[1][j], w[2][j]);
  }
  // sort columns by singular value, descending
  const order = [0, 1, 2].sort((i, j) => s[j] - s[i]);
  const sSorted = order.map((j) => s[j]);
  const vSorted: Mat3 = v.map((row) => order.map((j) => row[j]));
  for (let jj = 0; jj < 3; jj++) {
    const j = order[jj];
    if (sSorted[jj] > 1e-300) {
      for (let k = 0; k < 3; k++) u[k][jj] = w[k][j] / sSorted[jj];
    } else {
      // complete an orthonormal basis via the cross product
      const a0 = [u[0][0], u[1][0], u[2][0]];
      const a1 = [u[0][1], u[1][1], u[2][1]];
      const cx = a0[1] * a1[2] - a0[2] * a1[1];
      const cy = a0[2] * a1[0] - a0[0] * a1[2];
      const cz = a0[0] * a1[1] - a0[1] * a1[0];
      const n = Math.hypot(cx, cy, cz) || 1;
      u[0][jj] = cx / n;
      u[1][jj] = cy / n;
      u[2][jj] = cz / n;
    }
  }
  return { u, s: sSorted, v: vSorted };
}

/** Least-squares rotation (det +1) mapping centered+scaled src onto dst. */
function procrustesRotation(src: number[][], dst: number[][]): Mat3 {
  const h: Mat3 = [
    [0, 0, 0],
    [0, 0, 0],
    [0, 0, 0],
  ];
  for (let i = 0; i < src.length; i++)
    for (let r = 0; r < 3; r++)
      for (let c = 0; c < 3; c++) h[r][c] += src[i][r] * dst[i][c];
  const { u, s, v } = svd3(h);
  if (s[1] < 1e-9 * Math.max(s[0], 1e-300)) {
    throw new Error("degenerate face: anchor landmarks are collinear");
  }
  const ut: Mat3 = [0, 1, 2].map((i) => [0, 1, 2].map((j) => u[j][i]));
  const d = Math.sign(det3(matMul(v, ut)));
  const corr: Mat3 = [
    [1, 0, 0],
    [0, 1, 0],
    [0, 0, d],
  ];
  return matMul(matMul(v, corr), ut);
}

export function matrixToEuler(rot: Mat3): HeadPose {
  const sb = Math.min(1, Math.max(-1, -rot[1][2]));
  const pitch = (Math.asin(sb) * 180) / Math.PI;
  if (Math.abs(pitch) >= GIMBAL_LOCK_DEG) {
    const yaw = (Math.atan2(-rot[2][0], rot[0][0]) * 180) / Math.PI;
    return { yaw, pitch, roll: 0, gimbalLock: true };
  }
  const yaw = (Math.atan2(rot[0][2], rot[2][2]) * 180) / Math.PI;
  const roll = (Math.atan2(rot[1][0], rot[1][1]) * 180) / Math.PI;
  return { yaw, pitch, roll, gimbalLock: false };
}

export function estimateHeadPose(points: Float64Array, template: FaceTemplate): HeadPose {
  const idx = template.anchorIndices;
  const prep = (pts: Float64Array): number[][] => {
    const sel = idx.map((i) => pointAt(pts, i));
    const m = [0, 0, 0];
    for (const p of sel) for (let k = 0; k < 3; k++) m[k] += p[k] / sel.length;
    let norm = 0;
    const centered = sel.map((p) => {
      const q = [p[0] - m[0], p[1] - m[1], p[2] - m[2]];
      norm += q[0] * q[0] + q[1] * q[1] + q[2] * q[2];
      return q;
    });
    norm = Math.sqrt(norm);
    if (norm < 1e-12) throw new Error("degenerate face: anchor landmarks coincide");
    return centered.map((q) => [q[0] / norm, q[1] / norm, q[2] / norm]);
  };
  return matrixToEuler(procrustesRotation(prep(template.points), prep(points)));
}

function singleEyeGaze(points: Float64Array, eye: EyeIndices): [number, number] {
  const inner = pointAt(points, eye.inner);
  const outer = pointAt(points, eye.outer);
  const corner = [outer[0] - inner[0], outer[1] - inner[1], outer[2] - inner[2]];
  const cornerDist = Math.hypot(corner[0], corner[1], corner[2]);
  if (cornerDist < 1e-9) throw new Error("degenerate face: eye corner distance below 1e-9");
  const uHat = corner.map((v) => v / cornerDist);
  const upper = pointAt(points, eye.upper);
  const lower = pointAt(points, eye.lower);
  const lid = [upper[0] - lower[0], upper[1] - lower[1], upper[2] - lower[2]];
  const lidNorm = Math.hypot(lid[0], lid[1], lid[2]);
  if (lidNorm < 1e-9) throw new Error("degenerate face: eye lid axis degenerate");
  const vHat = lid.map((v) => v / lidNorm);
  const iris = pointAt(points, eye.iris);
  const offset = [
    iris[0] - 0.5 * (inner[0] + outer[0]),
    iris[1] - 0.5 * (inner[1] + outer[1]),
    iris[2] - 0.5 * (inner[2] + outer[2]),
  ];
  const half = 0.5 * cornerDist;
  const gx = (offset[0] * uHat[0] + offset[1] * uHat[1] + offset[2] * uHat[2]) / half;
  const gy = (offset[0] * vHat[0] + offset[1] * vHat[1] + offset[2] * vHat[2]) / half;
  return [gx, gy];
}

/** Per-eye iris offset on the corner/lid axes, averaged and clamped to
 * [-2, 2]. */
export function estimateGaze(points: Float64Array, template: FaceTemplate): [number, number] {
  const [lx, ly] = singleEyeGaze(points, template.leftEye);
  const [rx, ry] = singleEyeGaze(points, template.rightEye);
  const clamp = (v: number) => Math.min(2, Math.max(-2, v));
  return [clamp(0.5 * (lx + rx)), clamp(0.5 * (ly + ry))];
}

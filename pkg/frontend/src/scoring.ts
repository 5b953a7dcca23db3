/** Local per-frame scoring path: landmarks -> geometry features ->
 * emotion -> PCA -> one-class SVM decision -> anomaly level with EWMA
 * smoothing. Mirrors the engine so a shared bundle yields identical
 * packets. */

import { GazeMapData, MlpModel, ModelBundle, OcsvmModel, PcaModel } from "./bundle";
import { FaceTemplate, estimateGaze, estimateHeadPose, normalizeLandmarks } from "./geometry";
import {
  EmotionLabel,
  LandmarkFrame,
  MetricPacket,
  SessionMeta,
  argmaxEmotion,
} from "./types";

export function mlpInfer(model: MlpModel, x: ArrayLike<number>): number[] {
  const hidden = model.w1.length;
  const h = new Array<number>(hidden);
  for (let i = 0; i < hidden; i++) {
    let z = model.b1[i];
    const row = model.w1[i];
    for (let j = 0; j < row.length; j++) z += row[j] * x[j];
    h[i] = Math.tanh(z);
  }
  const out = new Array<number>(model.w2.length);
  let zMax = -Infinity;
  for (let i = 0; i < model.w2.length; i++) {
    let z = model.b2[i];
    const row = model.w2[i];
    for (let j = 0; j < hidden; j++) z += row[j] * h[j];
    out[i] = z;
    if (z > zMax) zMax = z;
  }
  let sum = 0;
  for (let i = 0; i < out.length; i++) {
    out[i] = Math.exp(out[i] - zMax);
    sum += out[i];
  }
  for (let i = 0; i < out.length; i++) out[i] /= sum;
  return out;
}

export function pcaTransform(pca: PcaModel, x: ArrayLike<number>): number[] {
  return pca.components.map((row) => {
    let acc = 0;
    for (let j = 0; j < row.length; j++) acc += row[j] * (x[j] - pca.mean[j]);
    return acc;
  });
}

export function decisionValue(model: OcsvmModel, x: number[]): number {
  let f = -model.rho;
  if (model.kernel.kind === "linear") {
    for (let i = 0; i < model.supportVectors.length; i++) {
      const sv = model.supportVectors[i];
      let dot = 0;
      for (let j = 0; j < sv.length; j++) dot += sv[j] * x[j];
      f += model.alphas[i] * dot;
    }
    return f;
  }
  const gamma = model.kernel.gamma as number;
  let xx = 0;
  for (let j = 0; j < x.length; j++) xx += x[j] * x[j];
  for (let i = 0; i < model.supportVectors.length; i++) {
    const sv = model.supportVectors[i];
    let ss = 0;
    let dot = 0;
    for (let j = 0; j < sv.length; j++) {
      ss += sv[j] * sv[j];
      dot += sv[j] * x[j];
    }
    const sq = Math.max(xx + ss - 2 * dot, 0);
    f += model.alphas[i] * Math.exp(-gamma * sq);
  }
  return f;
}

/** Logistic of the negated, scale-normalized decision value; 0.5 on the
 * boundary. */
export function levelFromDecision(f: number, scale: number): number {
  const t = Math.min(500, Math.max(-500, f / scale));
  return 1 / (1 + Math.exp(t));
}

export function applyGazeMap(map: GazeMapData, raw: [number, number]): [number, number] {
  const clamp = (v: number) => Math.min(1.5, Math.max(-0.5, v));
  return [
    clamp(map.a[0][0] * raw[0] + map.a[0][1] * raw[1] + map.b[0]),
    clamp(map.a[1][0] * raw[0] + map.a[1][1] * raw[1] + map.b[1]),
  ];
}

export interface ScoredFrame {
  packet: MetricPacket;
  rawLevel: number;
  smoothedLevel: number;
}

/** Sequential scorer for one session stream; owns its smoothing state. */
export class ScoringSession {
  private ewma: number | null = null;

  constructor(
    private readonly bundle: ModelBundle,
    private readonly template: FaceTemplate,
    private readonly meta: SessionMeta,
  ) {
    if (meta.landmark_count !== bundle.landmarkCount) {
      throw new Error(
        `stream landmark count ${meta.landmark_count} != bundle landmark count ${bundle.landmarkCount}`,
      );
    }
  }

  process(frame: LandmarkFrame): ScoredFrame {
    let raw: number;
    let label: EmotionLabel;
    if (frame.points === null) {
      raw = 1.0;
      label = "No-Face";
    } else {
      const normalized = normalizeLandmarks(frame.points, this.template);
      const pose = estimateHeadPose(frame.points, this.template);
      let gaze = estimateGaze(frame.points, this.template);
      if (this.bundle.gazeMap !== null) gaze = applyGazeMap(this.bundle.gazeMap, gaze);
      const emotion = mlpInfer(this.bundle.mlp, normalized);
      const coeffs = pcaTransform(this.bundle.pca, normalized);
      const feature = [
        ...emotion,
        gaze[0],
        gaze[1],
        pose.yaw,
        pose.pitch,
        pose.roll,
        ...coeffs,
        ...this.meta.course_vocabulary.map((c) =>
          c === this.meta.course_type ? 1.0 : 0.0,
        ),
      ];
      raw = levelFromDecision(decisionValue(this.bundle.ocsvm, feature), this.bundle.ocsvm.scoreScale);
      label = argmaxEmotion(emotion);
    }
    const lambda = this.bundle.config.smoothing;
    this.ewma = this.ewma === null ? raw : lambda * raw + (1 - lambda) * this.ewma;
    return {
      packet: {
        session_id: this.meta.session_id,
        user_id: this.meta.user_id,
        timestamp_ms: frame.timestampMs,
        emotion_label: label,
        anomaly_level: this.ewma,
        face_present: frame.points !== null,
      },
      rawLevel: raw,
      smoothedLevel: this.ewma,
    };
  }
}

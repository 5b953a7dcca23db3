/** Shared domain types mirroring the engine's wire formats. */

export const EMOTION_LABELS = [
  "Neutral",
  "Happiness",
  "Sadness",
  "Surprise",
  "Fear",
  "Disgust",
  "Anger",
  "Contempt",
  "None",
  "Uncertain",
  "No-Face",
] as const;

export type EmotionLabel = (typeof EMOTION_LABELS)[number];

export interface SessionMeta {
  session_id: string;
  user_id: string;
  course_type: string;
  session_kind: string;
  started_at: string;
  landmark_count: number;
  course_vocabulary: string[];
}

/** One timestamped landmark set; points is a flat [x,y,z,...] array or
 * null for an explicit no-face frame. */
export interface LandmarkFrame {
  timestampMs: number;
  points: Float64Array | null;
}

/** The only record that ever leaves the browser: no landmarks, no image
 * data. */
export interface MetricPacket {
  session_id: string;
  user_id: string;
  timestamp_ms: number;
  emotion_label: EmotionLabel;
  anomaly_level: number;
  face_present: boolean;
}

const PACKET_FIELDS = [
  "anomaly_level",
  "emotion_label",
  "face_present",
  "session_id",
  "timestamp_ms",
  "user_id",
] as const;

/** Serializes with keys in sorted order, matching the engine's packet
 * lines. */
export function packetToLine(p: MetricPacket): string {
  const ordered: Record<string, unknown> = {};
  for (const k of PACKET_FIELDS) ordered[k] = p[k];
  return JSON.stringify(ordered);
}

export function packetFromObject(d: Record<string, unknown>): MetricPacket {
  for (const k of PACKET_FIELDS) {
    if (!(k in d)) throw new Error(`packet missing field ${k}`);
  }
  const level = Number(d.anomaly_level);
  if (!(level >= 0 && level <= 1)) throw new Error("anomaly_level must lie in [0, 1]");
  const label = String(d.emotion_label) as EmotionLabel;
  if (!EMOTION_LABELS.includes(label)) throw new Error(`unknown emotion label ${label}`);
  return {
    session_id: String(d.session_id),
    user_id: String(d.user_id),
    timestamp_ms: Number(d.timestamp_ms),
    emotion_label: label,
    anomaly_level: level,
    face_present: Boolean(d.face_present),
  };
}

/** Index of the maximal probability; ties go to the lowest index. */
export function argmaxEmotion(probabilities: ArrayLike<number>): EmotionLabel {
  let best = 0;
  for (let i = 1; i < probabilities.length; i++) {
    if (probabilities[i] > probabilities[best]) best = i;
  }
  return EMOTION_LABELS[best];
}

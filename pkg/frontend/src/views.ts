/** View models for the teacher dashboard and the per-student focus-log
 * chart. Pure data transforms: no DOM, so they test headlessly. */

import { EmotionLabel, MetricPacket } from "./types";

// -- teacher dashboard -------------------------------------------------------

export interface StudentSnapshot {
  user_id: string;
  status: "connected" | "stale" | "disconnected";
  latest: Record<string, unknown> | null;
  rolling_mean_anomaly: number | null;
  packet_count: number;
}

export interface DashboardTile {
  userId: string;
  badge: "live" | "stale" | "offline";
  rollingMeanAnomaly: number | null;
  latestEmotion: string | null;
  packetCount: number;
}

const BADGES: Record<StudentSnapshot["status"], DashboardTile["badge"]> = {
  connected: "live",
  stale: "stale",
  disconnected: "offline",
};

export function dashboardTiles(students: StudentSnapshot[]): DashboardTile[] {
  return students
    .map((s) => ({
      userId: s.user_id,
      badge: BADGES[s.status],
      rollingMeanAnomaly: s.rolling_mean_anomaly,
      latestEmotion: s.latest === null ? null : String(s.latest.emotion_label),
      packetCount: s.packet_count,
    }))
    .sort((a, b) => (a.userId < b.userId ? -1 : a.userId > b.userId ? 1 : 0));
}

// -- focus-log chart ---------------------------------------------------------

export interface FocusPoint {
  timestampMs: number;
  level: number;
  facePresent: boolean;
}

/** Contiguous run of one emotion label, for background shading. */
export interface EmotionBand {
  label: EmotionLabel;
  startMs: number;
  endMs: number;
}

export interface EventMarker {
  timestampMs: number;
  kind: string;
}

export interface FocusLogView {
  points: FocusPoint[];
  bands: EmotionBand[];
  markers: EventMarker[];
  /** Placeholder until curated guidance content exists. */
  guidanceUrl: string;
}

export const GUIDANCE_PLACEHOLDER_URL = "about:blank#focus-guidance";

export function focusLogView(
  packets: MetricPacket[],
  events: [number, string][] = [],
): FocusLogView {
  const ordered = [...packets].sort((a, b) => a.timestamp_ms - b.timestamp_ms);
  const points = ordered.map((p) => ({
    timestampMs: p.timestamp_ms,
    level: p.anomaly_level,
    facePresent: p.face_present,
  }));
  const bands: EmotionBand[] = [];
  for (const p of ordered) {
    const last = bands[bands.length - 1];
    if (last !== undefined && last.label === p.emotion_label) {
      last.endMs = p.timestamp_ms;
    } else {
      bands.push({ label: p.emotion_label, startMs: p.timestamp_ms, endMs: p.timestamp_ms });
    }
  }
  const markers = events
    .map(([timestampMs, kind]) => ({ timestampMs, kind }))
    .sort((a, b) => a.timestampMs - b.timestampMs);
  return { points, bands, markers, guidanceUrl: GUIDANCE_PLACEHOLDER_URL };
}

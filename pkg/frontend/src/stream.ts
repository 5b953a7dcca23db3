/** Parser for the landmark stream format (.fwls): one JSON header line,
 * then one space-separated record per frame:
 * `timestamp_ms face_present(0|1) x y z ...`. */

import { LandmarkFrame, SessionMeta } from "./types";

export const STREAM_FORMAT = "fw-landmark-stream";
export const STREAM_VERSION = 1;

export interface ParsedStream {
  meta: SessionMeta;
  frames: LandmarkFrame[];
}

export function parseStream(text: string): ParsedStream {
  const lines = text.split("\n");
  let header: any;
  try {
    header = JSON.parse(lines[0]);
  } catch {
    throw new Error("not a landmark stream: unparseable header");
  }
  if (header.format !== STREAM_FORMAT) throw new Error("unexpected stream format");
  if (header.version !== STREAM_VERSION) {
    throw new Error(`unsupported stream version ${header.version}`);
  }
  const m = header.meta;
  const meta: SessionMeta = {
    session_id: m.session_id,
    user_id: m.user_id,
    course_type: m.course_type,
    session_kind: m.session_kind,
    started_at: m.started_at,
    landmark_count: m.landmark_count,
    course_vocabulary: [...(m.course_vocabulary ?? [])],
  };
  const expected = 3 * meta.landmark_count;
  const frames: LandmarkFrame[] = [];
  let prevTs = -Infinity;
  for (let lineno = 1; lineno < lines.length; lineno++) {
    const parts = lines[lineno].split(/\s+/).filter((p) => p.length > 0);
    if (parts.length === 0) continue;
    const ts = Number(parts[0]);
    if (!Number.isInteger(ts) || (parts[1] !== "0" && parts[1] !== "1")) {
      throw new Error(`bad frame record at line ${lineno + 1}`);
    }
    if (ts < prevTs) throw new Error(`timestamp ${ts} after ${prevTs} at line ${lineno + 1}`);
    prevTs = ts;
    if (parts[1] === "0") {
      frames.push({ timestampMs: ts, points: null });
      continue;
    }
    if (parts.length - 2 !== expected) {
      throw new Error(
        `line ${lineno + 1}: ${parts.length - 2} coordinates, expected ${expected}`,
      );
    }
    const points = new Float64Array(expected);
    for (let i = 0; i < expected; i++) points[i] = Number(parts[i + 2]);
    frames.push({ timestampMs: ts, points });
  }
  return { meta, frames };
}

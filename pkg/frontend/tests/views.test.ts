import { describe, expect, it } from "vitest";

import { GUIDANCE_PLACEHOLDER_URL, dashboardTiles, focusLogView } from "../src/views";
import { MetricPacket } from "../src/types";

function packet(ts: number, level: number, label = "Neutral", present = true): MetricPacket {
  return {
    session_id: "s1",
    user_id: "u1",
    timestamp_ms: ts,
    emotion_label: label as MetricPacket["emotion_label"],
    anomaly_level: level,
    face_present: present,
  };
}

describe("dashboard tiles", () => {
  it("maps connection status to the display badge", () => {
    const tiles = dashboardTiles([
      {
        user_id: "bob",
        status: "stale",
        latest: { emotion_label: "Happiness" },
        rolling_mean_anomaly: 0.4,
        packet_count: 10,
      },
      {
        user_id: "alice",
        status: "connected",
        latest: { emotion_label: "Neutral" },
        rolling_mean_anomaly: 0.2,
        packet_count: 42,
      },
      {
        user_id: "carol",
        status: "disconnected",
        latest: null,
        rolling_mean_anomaly: null,
        packet_count: 0,
      },
    ]);
    // tiles come back sorted by user id
    expect(tiles.map((t) => t.userId)).toEqual(["alice", "bob", "carol"]);
    expect(tiles.map((t) => t.badge)).toEqual(["live", "stale", "offline"]);
    expect(tiles[0].latestEmotion).toBe("Neutral");
    expect(tiles[2].latestEmotion).toBeNull();
    expect(tiles[2].rollingMeanAnomaly).toBeNull();
  });
});

describe("focus-log view", () => {
  it("orders points by timestamp and carries levels through", () => {
    const view = focusLogView([packet(200, 0.3), packet(0, 0.1), packet(100, 0.2)]);
    expect(view.points.map((p) => p.timestampMs)).toEqual([0, 100, 200]);
    expect(view.points.map((p) => p.level)).toEqual([0.1, 0.2, 0.3]);
  });

  it("merges consecutive identical emotions into bands", () => {
    const view = focusLogView([
      packet(0, 0.1, "Neutral"),
      packet(100, 0.1, "Neutral"),
      packet(200, 0.6, "Surprise"),
      packet(300, 0.2, "Neutral"),
    ]);
    expect(view.bands).toEqual([
      { label: "Neutral", startMs: 0, endMs: 100 },
      { label: "Surprise", startMs: 200, endMs: 200 },
      { label: "Neutral", startMs: 300, endMs: 300 },
    ]);
  });

  it("sorts event markers and keeps their kinds", () => {
    const view = focusLogView(
      [packet(0, 0.1)],
      [
        [5000, "notification"],
        [1000, "notification"],
      ],
    );
    expect(view.markers).toEqual([
      { timestampMs: 1000, kind: "notification" },
      { timestampMs: 5000, kind: "notification" },
    ]);
  });

  it("links the placeholder guidance page", () => {
    expect(focusLogView([]).guidanceUrl).toBe(GUIDANCE_PLACEHOLDER_URL);
  });
});

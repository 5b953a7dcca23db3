import { describe, expect, it } from "vitest";

import { PacketPublisher, Transport } from "../src/client";
import { MetricPacket } from "../src/types";

class FakeTransport implements Transport {
  connected = true;
  sent: string[] = [];
  send(line: string): void {
    if (!this.connected) throw new Error("send on closed transport");
    this.sent.push(line);
  }
}

function packet(ts: number): MetricPacket {
  return {
    session_id: "s1",
    user_id: "u1",
    timestamp_ms: ts,
    emotion_label: "Neutral",
    anomaly_level: 0.25,
    face_present: true,
  };
}

describe("packet publisher", () => {
  it("sends nothing before consent is granted", () => {
    const transport = new FakeTransport();
    const pub = new PacketPublisher(transport);
    expect(pub.publish(packet(0))).toBe(false);
    expect(transport.sent).toHaveLength(0);
    expect(pub.queuedCount).toBe(0);
  });

  it("sends immediately once consent is granted", () => {
    const transport = new FakeTransport();
    const pub = new PacketPublisher(transport);
    pub.grantConsent();
    expect(pub.publish(packet(100))).toBe(true);
    expect(transport.sent).toHaveLength(1);
    expect(JSON.parse(transport.sent[0]).timestamp_ms).toBe(100);
  });

  it("buffers while disconnected and flushes in order on reconnect", () => {
    const transport = new FakeTransport();
    const pub = new PacketPublisher(transport);
    pub.grantConsent();
    transport.connected = false;
    for (let i = 0; i < 5; i++) pub.publish(packet(i * 100));
    expect(transport.sent).toHaveLength(0);
    expect(pub.queuedCount).toBe(5);
    transport.connected = true;
    expect(pub.onReconnect()).toBe(5);
    const stamps = transport.sent.map((l) => JSON.parse(l).timestamp_ms);
    expect(stamps).toEqual([0, 100, 200, 300, 400]);
    expect(pub.queuedCount).toBe(0);
  });

  it("drops the oldest packets when the offline queue is full", () => {
    const transport = new FakeTransport();
    const pub = new PacketPublisher(transport, 3);
    pub.grantConsent();
    transport.connected = false;
    for (let i = 0; i < 6; i++) pub.publish(packet(i));
    expect(pub.queuedCount).toBe(3);
    expect(pub.droppedCount).toBe(3);
    transport.connected = true;
    pub.onReconnect();
    expect(transport.sent.map((l) => JSON.parse(l).timestamp_ms)).toEqual([3, 4, 5]);
  });

  it("revoking consent clears any queued packets", () => {
    const transport = new FakeTransport();
    const pub = new PacketPublisher(transport);
    pub.grantConsent();
    transport.connected = false;
    pub.publish(packet(0));
    pub.revokeConsent();
    expect(pub.queuedCount).toBe(0);
    transport.connected = true;
    expect(pub.onReconnect()).toBe(0);
    expect(pub.publish(packet(1))).toBe(false);
  });
});

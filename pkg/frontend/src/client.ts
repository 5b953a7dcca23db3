/** Packet publisher: the only path by which data leaves the browser.
 * Nothing is sent (or even queued) before explicit consent; while the
 * transport is down, packets accumulate in a bounded queue and flush in
 * order on reconnect. */

import { MetricPacket, packetToLine } from "./types";

export interface Transport {
  connected: boolean;
  send(line: string): void;
}

export class PacketPublisher {
  private consent = false;
  private queue: string[] = [];
  private _dropped = 0;

  constructor(
    private readonly transport: Transport,
    private readonly maxQueue = 1024,
  ) {}

  get consentGranted(): boolean {
    return this.consent;
  }

  get queuedCount(): number {
    return this.queue.length;
  }

  /** Packets discarded because the queue overflowed while offline. */
  get droppedCount(): number {
    return this._dropped;
  }

  grantConsent(): void {
    this.consent = true;
  }

  revokeConsent(): void {
    this.consent = false;
    this.queue = [];
  }

  /** Queues then flushes; without consent the packet is discarded
   * entirely. Returns true if the packet was accepted. */
  publish(packet: MetricPacket): boolean {
    if (!this.consent) return false;
    if (this.queue.length >= this.maxQueue) {
      this.queue.shift();
      this._dropped += 1;
    }
    this.queue.push(packetToLine(packet));
    this.flush();
    return true;
  }

  /** Sends queued lines oldest-first while the transport stays up. */
  flush(): number {
    let sent = 0;
    while (this.transport.connected && this.queue.length > 0) {
      this.transport.send(this.queue.shift() as string);
      sent += 1;
    }
    return sent;
  }

  /** Call when the transport reports it is connected again. */
  onReconnect(): number {
    return this.flush();
  }
}

// Bridge connection: JSON text over WebSocket with automatic retry and a
// fixed outbound debounce matching the bridge's inbound rate.

import { ConsoleStore } from "./state.js";
import { InboundMsg, OutboundMsg } from "./types.js";

export const OUTBOUND_PERIOD_MS = 33; // one bridge scene period

// The subset of the WebSocket API the console uses; tests inject fakes.
export interface SocketLike {
  onopen: (() => void) | null;
  onclose: (() => void) | null;
  onerror: (() => void) | null;
  onmessage: ((ev: { data: string }) => void) | null;
  send(data: string): void;
  close(): void;
}

export type SocketFactory = (url: string) => SocketLike;

export class BridgeConnection {
  private socket: SocketLike | null = null;
  private retryMs = 500;
  private retryTimer: ReturnType<typeof setTimeout> | null = null;
  private sendTimer: ReturnType<typeof setInterval> | null = null;
  private pending: OutboundMsg[] = [];
  closed = false;

  constructor(
    readonly url: string,
    readonly store: ConsoleStore,
    private factory: SocketFactory = (u) =>
      new WebSocket(u) as unknown as SocketLike,
  ) {}

  connect(): void {
    if (this.closed) return;
    this.store.setConnection("connecting", this.url);
    let socket: SocketLike;
    try {
      socket = this.factory(this.url);
    } catch (err) {
      this.store.setConnection("disconnected", `connect failed: ${err}`);
      this.scheduleRetry();
      return;
    }
    this.socket = socket;
    socket.onopen = () => {
      this.retryMs = 500;
      this.store.setConnection("connected");
    };
    socket.onmessage = (ev) => {
      let msg: InboundMsg;
      try {
        msg = JSON.parse(ev.data) as InboundMsg;
      } catch {
        this.store.note("unparseable message from bridge");
        return;
      }
      this.store.apply(msg);
    };
    socket.onerror = () => {
      this.store.setConnection("disconnected", "socket error");
    };
    socket.onclose = () => {
      if (this.store.connection !== "disconnected") {
        this.store.setConnection("disconnected", "bridge closed");
      }
      this.scheduleRetry();
    };
    if (this.sendTimer === null) {
      this.sendTimer = setInterval(() => this.flushPending(), OUTBOUND_PERIOD_MS);
    }
  }

  private scheduleRetry(): void {
    if (this.closed || this.retryTimer !== null) return;
    const delay = this.retryMs;
    this.retryMs = Math.min(this.retryMs * 2, 8000); // backoff
    this.retryTimer = setTimeout(() => {
      this.retryTimer = null;
      this.connect();
    }, delay);
  }

  /** Queue outbound messages; they leave at the debounce cadence. */
  enqueue(msgs: OutboundMsg[]): void {
    this.pending.push(...msgs);
  }

  flushPending(): void {
    if (this.store.connection !== "connected" || this.socket === null) return;
    for (const msg of this.pending.splice(0)) {
      this.socket.send(JSON.stringify(msg));
    }
  }

  close(): void {
    this.closed = true;
    if (this.retryTimer !== null) clearTimeout(this.retryTimer);
    if (this.sendTimer !== null) clearInterval(this.sendTimer);
    this.socket?.close();
  }
}

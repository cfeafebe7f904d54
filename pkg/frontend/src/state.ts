// Console state store: one mutable snapshot the socket fills and the
// renderers read each animation frame. Displayed numerics always equal
// the last received wire values; any smoothing happens in the views.

import {
  FeedbackMode, GloveMsg, HapticMsg, InboundMsg, SceneMsg, Side, SIDES,
  TORQUE_MAX,
} from "./types.js";

export class RingBuffer<T> {
  private items: T[] = [];
  constructor(readonly capacity: number) {}

  push(item: T): void {
    this.items.push(item);
    if (this.items.length > this.capacity) {
      this.items.splice(0, this.items.length - this.capacity);
    }
  }

  get length(): number {
    return this.items.length;
  }

  toArray(): T[] {
    return this.items.slice();
  }

  last(): T | undefined {
    return this.items[this.items.length - 1];
  }
}

export interface TimelineEvent {
  t_ms: number;
  text: string;
}

export interface ForceSample {
  bend: number;     // mean commanded-finger bend from the scene
  force: number[];  // per-finger newtons
  t: number;
}

export interface HandView {
  taxels: number[][];   // 5 x 16 counts, highest seq wins
  hapticSeq: number;
  tau: number[];        // displayed torques, already clamped at the cap
  gloveSeq: number;
}

function emptyHand(): HandView {
  return {
    taxels: Array.from({ length: 5 }, () => new Array(16).fill(0)),
    hapticSeq: 0,
    tau: new Array(5).fill(0),
    gloveSeq: 0,
  };
}

export type Connection = "disconnected" | "connecting" | "connected";

export class ConsoleStore {
  connection: Connection = "disconnected";
  banner = "";
  scene: SceneMsg | null = null;
  hands: Record<Side, HandView> = { left: emptyHand(), right: emptyHand() };
  feedbackMode: FeedbackMode = "visual_plus_haptic";
  timeline = new RingBuffer<TimelineEvent>(512);
  forceHistory: Record<Side, RingBuffer<ForceSample>> = {
    left: new RingBuffer(600),
    right: new RingBuffer(600),
  };
  seqGaps = 0;
  lastError = "";
  private clock: () => number;

  constructor(clock: () => number = () => Date.now()) {
    this.clock = clock;
  }

  note(text: string): void {
    this.timeline.push({ t_ms: this.clock(), text });
  }

  apply(msg: InboundMsg): void {
    switch (msg.type) {
      case "scene":
        this.applyScene(msg);
        break;
      case "haptic":
        this.applyHaptic(msg);
        break;
      case "glove":
        this.applyGlove(msg);
        break;
      case "error":
        this.lastError = msg.message;
        this.note(`bridge rejected input: ${msg.message}`);
        break;
      case "pong":
        break;
    }
  }

  private applyScene(msg: SceneMsg): void {
    this.scene = msg;
    for (const side of SIDES) {
      const view = msg.sides[side];
      if (!view) continue;
      const meanBend =
        view.bend.reduce((a, b) => a + b, 0) / view.bend.length;
      this.forceHistory[side].push({
        bend: meanBend,
        force: view.force.slice(),
        t: msg.t,
      });
    }
  }

  private applyHaptic(msg: HapticMsg): void {
    const hand = this.hands[msg.side];
    if (msg.seq <= hand.hapticSeq) {
      return; // stale frame: the displayed grid is the highest seq received
    }
    if (hand.hapticSeq > 0 && msg.seq > hand.hapticSeq + 1) {
      this.seqGaps += 1;
      this.note(
        `haptic gap on ${msg.side}: seq ${hand.hapticSeq} -> ${msg.seq}`,
      );
    }
    hand.hapticSeq = msg.seq;
    hand.taxels = msg.taxels.map((grid) => grid.slice());
  }

  private applyGlove(msg: GloveMsg): void {
    const hand = this.hands[msg.side];
    this.feedbackMode = msg.feedback_mode;
    hand.gloveSeq = msg.seq;
    if (msg.feedback_mode === "visual_only") {
      hand.tau = new Array(5).fill(0);
      return;
    }
    // Clamp for display: the glove itself never exceeds the cap, but the
    // bars must saturate visibly rather than overflow.
    hand.tau = msg.tau.map((t) => Math.min(Math.max(t, 0), TORQUE_MAX));
  }

  setConnection(state: Connection, detail = ""): void {
    this.connection = state;
    this.banner = detail;
    this.note(`connection: ${state}${detail ? ` (${detail})` : ""}`);
  }
}

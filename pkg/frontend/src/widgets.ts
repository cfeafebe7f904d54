// Input widget model: wrist sliders and orientation dials, five finger
// sliders plus thumb split per hand, calibrate, feedback-mode toggle.
// Values are clamped into their ranges here, so the console can never
// send an out-of-range message.

import { FeedbackMode, OutboundMsg, Side, SIDES } from "./types.js";

export const WRIST_RANGE_M = 0.3;        // +/- per axis
export const WRIST_RPY_RANGE = Math.PI / 2;

const clamp = (v: number, lo: number, hi: number) =>
  Math.min(Math.max(v, lo), hi);

export interface HandWidgets {
  pos: [number, number, number];
  rpy: [number, number, number];
  bend: [number, number, number, number, number];
  split: number;
}

function neutralHand(): HandWidgets {
  return { pos: [0, 0, 0], rpy: [0, 0, 0], bend: [0, 0, 0, 0, 0], split: 0 };
}

export class WidgetModel {
  hands: Record<Side, HandWidgets> = {
    left: neutralHand(),
    right: neutralHand(),
  };
  feedbackMode: FeedbackMode = "visual_plus_haptic";
  private dirty = new Set<string>();
  private queue: OutboundMsg[] = [];

  setWristAxis(side: Side, axis: 0 | 1 | 2, value: number): void {
    this.hands[side].pos[axis] = clamp(value, -WRIST_RANGE_M, WRIST_RANGE_M);
    this.dirty.add(`wrist:${side}`);
  }

  setWristRpy(side: Side, axis: 0 | 1 | 2, value: number): void {
    this.hands[side].rpy[axis] = clamp(value, -WRIST_RPY_RANGE, WRIST_RPY_RANGE);
    this.dirty.add(`wrist:${side}`);
  }

  setFinger(side: Side, finger: number, value: number): void {
    if (finger < 0 || finger > 4) return;
    this.hands[side].bend[finger] = clamp(value, 0, 1);
    this.dirty.add(`hand:${side}`);
  }

  setSplit(side: Side, value: number): void {
    this.hands[side].split = clamp(value, 0, 1);
    this.dirty.add(`hand:${side}`);
  }

  calibrate(side?: Side): void {
    this.queue.push(side ? { type: "calibrate", side } : { type: "calibrate" });
    // A fresh reference frame means the current widget pose re-zeroes.
    for (const s of side ? [side] : SIDES) {
      this.hands[s].pos = [0, 0, 0];
      this.hands[s].rpy = [0, 0, 0];
      this.dirty.add(`wrist:${s}`);
    }
  }

  toggleFeedback(): FeedbackMode {
    this.feedbackMode =
      this.feedbackMode === "visual_plus_haptic"
        ? "visual_only"
        : "visual_plus_haptic";
    this.queue.push({ type: "feedback_mode", mode: this.feedbackMode });
    return this.feedbackMode;
  }

  // Optional gamepad mapping: left stick xy -> wrist xy, triggers -> grip.
  applyGamepad(pad: { axes: readonly number[];
                      buttons: readonly { value: number }[] },
               side: Side = "right"): void {
    if (pad.axes.length >= 2) {
      this.setWristAxis(side, 0, pad.axes[0] * WRIST_RANGE_M);
      this.setWristAxis(side, 1, -pad.axes[1] * WRIST_RANGE_M);
    }
    if (pad.buttons.length > 7) {
      const grip = pad.buttons[7].value;
      for (let f = 0; f < 5; f++) this.setFinger(side, f, grip);
    }
  }

  /** Drain pending messages: explicit actions plus one message per dirty
   *  widget group. Called at the outbound debounce cadence. */
  flush(): OutboundMsg[] {
    const out = this.queue.splice(0);
    for (const key of this.dirty) {
      const [kind, side] = key.split(":") as [string, Side];
      const hand = this.hands[side];
      if (kind === "wrist") {
        out.push({ type: "wrist", side, pos: hand.pos.slice(),
                   rpy: hand.rpy.slice() });
      } else {
        out.push({ type: "hand", side, bend: hand.bend.slice(),
                   split: hand.split });
      }
    }
    this.dirty.clear();
    return out;
  }
}

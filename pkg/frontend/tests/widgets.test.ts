import { describe, expect, it } from "vitest";

import { WidgetModel, WRIST_RANGE_M } from "../src/widgets.js";

describe("widget ranges", () => {
  it("never emits out-of-range values", () => {
    const model = new WidgetModel();
    model.setFinger("right", 0, 1.7);
    model.setFinger("right", 1, -0.4);
    model.setSplit("right", 2.0);
    model.setWristAxis("right", 0, 99);
    model.setWristRpy("right", 2, -99);
    const out = model.flush();
    const hand = out.find((m) => m.type === "hand");
    const wrist = out.find((m) => m.type === "wrist");
    expect(hand && hand.type === "hand" ? hand.bend : []).toEqual(
      [1, 0, 0, 0, 0]);
    expect(hand && hand.type === "hand" ? hand.split : -1).toBe(1);
    if (wrist && wrist.type === "wrist") {
      expect(wrist.pos[0]).toBe(WRIST_RANGE_M);
      expect(Math.abs(wrist.rpy[2])).toBeLessThanOrEqual(Math.PI / 2);
    } else {
      throw new Error("wrist message missing");
    }
  });

  it("ignores unknown finger indices", () => {
    const model = new WidgetModel();
    model.setFinger("right", 9, 1.0);
    expect(model.flush()).toEqual([]);
  });
});

describe("debounced flush", () => {
  it("coalesces repeated slider moves into one message per group", () => {
    const model = new WidgetModel();
    for (let i = 0; i < 50; i++) model.setFinger("right", 1, i / 50);
    for (let i = 0; i < 50; i++) model.setWristAxis("right", 0, i / 500);
    const out = model.flush();
    expect(out.filter((m) => m.type === "hand")).toHaveLength(1);
    expect(out.filter((m) => m.type === "wrist")).toHaveLength(1);
    expect(model.flush()).toEqual([]); // nothing left pending
  });
});

describe("calibrate and feedback toggle", () => {
  it("emits calibrate and re-zeroes the wrist widgets", () => {
    const model = new WidgetModel();
    model.setWristAxis("right", 0, 0.1);
    model.flush();
    model.calibrate("right");
    const out = model.flush();
    expect(out[0]).toEqual({ type: "calibrate", side: "right" });
    const wrist = out.find((m) => m.type === "wrist");
    expect(wrist && wrist.type === "wrist" ? wrist.pos : null)
      .toEqual([0, 0, 0]);
  });

  it("toggles feedback mode back and forth", () => {
    const model = new WidgetModel();
    expect(model.toggleFeedback()).toBe("visual_only");
    expect(model.toggleFeedback()).toBe("visual_plus_haptic");
    const modes = model.flush().filter((m) => m.type === "feedback_mode");
    expect(modes).toHaveLength(2);
  });

  it("maps a gamepad onto wrist and grip within ranges", () => {
    const model = new WidgetModel();
    model.applyGamepad({ axes: [1.0, -1.0],
                         buttons: Array.from({ length: 8 },
                                             () => ({ value: 0.8 })) });
    const out = model.flush();
    const wrist = out.find((m) => m.type === "wrist");
    const hand = out.find((m) => m.type === "hand");
    if (!wrist || wrist.type !== "wrist" || !hand || hand.type !== "hand") {
      throw new Error("expected wrist and hand messages");
    }
    expect(wrist.pos[0]).toBeCloseTo(WRIST_RANGE_M);
    expect(hand.bend.every((b) => b === 0.8)).toBe(true);
  });
});

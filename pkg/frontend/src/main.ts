// Console assembly: builds the DOM, wires widgets to the bridge socket,
// and repaints the views every animation frame.
//
// URL query parameters: ?endpoint=ws://127.0.0.1:8765&side=right
// (side limits the input panel; both hands are always displayed).

import { drawForceBendChart, drawHeatmaps, drawPenGauge, drawTorqueBars,
         sceneReadout } from "./render.js";
import { BridgeConnection } from "./socket.js";
import { ConsoleStore } from "./state.js";
import { FINGERS, Side, SIDES } from "./types.js";
import { WidgetModel, WRIST_RANGE_M, WRIST_RPY_RANGE } from "./widgets.js";

const params = new URLSearchParams(window.location.search);
const endpoint = params.get("endpoint") ?? "ws://127.0.0.1:8765";
const inputSide = (params.get("side") ?? "right") as Side;

const store = new ConsoleStore();
const widgets = new WidgetModel();
const connection = new BridgeConnection(endpoint, store);

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K, parent: HTMLElement, cls = "",
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (cls) node.className = cls;
  parent.appendChild(node);
  return node;
}

function slider(
  parent: HTMLElement, label: string, lo: number, hi: number, step: number,
  onInput: (v: number) => void, initial = 0,
): HTMLInputElement {
  const row = el("label", parent, "slider-row");
  el("span", row).textContent = label;
  const input = el("input", row);
  input.type = "range";
  input.min = String(lo);
  input.max = String(hi);
  input.step = String(step);
  input.value = String(initial);
  const value = el("span", row, "value");
  value.textContent = initial.toFixed(2);
  input.addEventListener("input", () => {
    const v = parseFloat(input.value);
    value.textContent = v.toFixed(2);
    onInput(v);
    connection.enqueue(widgets.flush());
  });
  return input;
}

const root = document.getElementById("app")!;
const banner = el("div", root, "banner");
const grid = el("div", root, "grid");

const inputPanel = el("div", grid, "panel");
el("h2", inputPanel).textContent = `operator input (${inputSide})`;
(["x", "y", "z"] as const).forEach((axis, i) =>
  slider(inputPanel, `wrist ${axis}`, -WRIST_RANGE_M, WRIST_RANGE_M, 0.005,
         (v) => widgets.setWristAxis(inputSide, i as 0 | 1 | 2, v)));
(["roll", "pitch", "yaw"] as const).forEach((axis, i) =>
  slider(inputPanel, axis, -WRIST_RPY_RANGE, WRIST_RPY_RANGE, 0.01,
         (v) => widgets.setWristRpy(inputSide, i as 0 | 1 | 2, v)));
FINGERS.forEach((name, f) =>
  slider(inputPanel, name, 0, 1, 0.01,
         (v) => widgets.setFinger(inputSide, f, v)));
slider(inputPanel, "thumb split", 0, 1, 0.01,
       (v) => widgets.setSplit(inputSide, v));

const buttons = el("div", inputPanel, "buttons");
const calibrateBtn = el("button", buttons);
calibrateBtn.textContent = "calibrate";
calibrateBtn.addEventListener("click", () => {
  widgets.calibrate(inputSide);
  connection.enqueue(widgets.flush());
  store.note("calibrate pressed");
});
const modeBtn = el("button", buttons);
modeBtn.textContent = "feedback: visual+haptic";
modeBtn.addEventListener("click", () => {
  const mode = widgets.toggleFeedback();
  modeBtn.textContent =
    mode === "visual_plus_haptic" ? "feedback: visual+haptic"
                                  : "feedback: visual only";
  connection.enqueue(widgets.flush());
});

interface SidePanel {
  heat: CanvasRenderingContext2D;
  bars: CanvasRenderingContext2D;
  chart: CanvasRenderingContext2D;
  readout: HTMLPreElement;
}

function buildSidePanel(side: Side): SidePanel {
  const panel = el("div", grid, "panel");
  el("h2", panel).textContent = `${side} hand`;
  const heat = el("canvas", panel);
  heat.width = 480;
  heat.height = 110;
  el("div", panel, "cap").textContent = "fingertip taxels (4x4 each)";
  const bars = el("canvas", panel);
  bars.width = 480;
  bars.height = 90;
  el("div", panel, "cap").textContent = "glove torque, clamps at 0.5 N*m";
  const chart = el("canvas", panel);
  chart.width = 480;
  chart.height = 150;
  el("div", panel, "cap").textContent = "force vs bend";
  const readout = el("pre", panel, "readout");
  return {
    heat: heat.getContext("2d")!,
    bars: bars.getContext("2d")!,
    chart: chart.getContext("2d")!,
    readout,
  };
}

const panels: Record<Side, SidePanel> = {
  left: buildSidePanel("left"),
  right: buildSidePanel("right"),
};

const scenePanel = el("div", grid, "panel");
el("h2", scenePanel).textContent = "scene";
const penCanvas = el("canvas", scenePanel);
penCanvas.width = 160;
penCanvas.height = 160;
el("div", scenePanel, "cap").textContent = "pen angle";
const timelinePre = el("pre", scenePanel, "timeline");

// Gamepad steering is optional; sliders stay authoritative when no pad
// is connected.
function pollGamepad(): void {
  const pads = navigator.getGamepads?.() ?? [];
  const pad = pads.find((p) => p !== null);
  if (pad) {
    widgets.applyGamepad(pad, inputSide);
    connection.enqueue(widgets.flush());
  }
}

function frame(): void {
  banner.textContent =
    store.connection === "connected"
      ? `connected to ${endpoint}` +
        (store.seqGaps ? `  [${store.seqGaps} haptic seq gaps]` : "")
      : `${store.connection}... ${store.banner}`;
  banner.className = `banner ${store.connection}`;
  for (const side of SIDES) {
    const panel = panels[side];
    drawHeatmaps(panel.heat, store, side, 480);
    drawTorqueBars(panel.bars, store, side, 480, 90);
    drawForceBendChart(panel.chart, store, side, 480, 150);
    panel.readout.textContent = sceneReadout(store, side);
  }
  drawPenGauge(penCanvas.getContext("2d")!, store, 160);
  timelinePre.textContent = store.timeline
    .toArray()
    .slice(-12)
    .map((e) => `${new Date(e.t_ms).toLocaleTimeString()} ${e.text}`)
    .join("\n");
  pollGamepad();
  requestAnimationFrame(frame);
}

connection.connect();
requestAnimationFrame(frame);

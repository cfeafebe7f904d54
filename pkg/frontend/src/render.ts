// Canvas renderers for the console views. Pure drawing: every numeric
// shown comes straight from the store; only colors interpolate.

import { ConsoleStore } from "./state.js";
import { COUNTS_PER_NEWTON, FINGERS, Side, TORQUE_MAX } from "./types.js";

// Full-scale heatmap cell: 2 N on one taxel.
const CELL_FULL_COUNTS = 2 * COUNTS_PER_NEWTON;

export function heatColor(count: number): string {
  const u = Math.min(count / CELL_FULL_COUNTS, 1);
  const r = Math.round(40 + 215 * u);
  const g = Math.round(44 + 120 * (1 - u) * u * 4);
  const b = Math.round(72 * (1 - u));
  return `rgb(${r},${g},${b})`;
}

export function drawHeatmaps(
  ctx: CanvasRenderingContext2D, store: ConsoleStore, side: Side,
  width: number,
): void {
  const cell = Math.floor(width / (5 * 4 + 4));
  const grid = store.hands[side].taxels;
  ctx.clearRect(0, 0, width, cell * 4 + 16);
  for (let finger = 0; finger < 5; finger++) {
    const x0 = finger * (cell * 4 + cell);
    for (let i = 0; i < 16; i++) {
      const row = Math.floor(i / 4);
      const col = i % 4;
      ctx.fillStyle = heatColor(grid[finger][i]);
      ctx.fillRect(x0 + col * cell, row * cell, cell - 1, cell - 1);
    }
    ctx.fillStyle = "#9aa";
    ctx.font = "10px monospace";
    ctx.fillText(FINGERS[finger].slice(0, 3), x0, cell * 4 + 10);
  }
}

export function drawTorqueBars(
  ctx: CanvasRenderingContext2D, store: ConsoleStore, side: Side,
  width: number, height: number,
): void {
  const tau = store.hands[side].tau;
  const barW = Math.floor(width / 5) - 6;
  ctx.clearRect(0, 0, width, height);
  for (let f = 0; f < 5; f++) {
    const frac = Math.min(tau[f] / TORQUE_MAX, 1);
    const h = Math.round((height - 14) * frac);
    const x = f * (barW + 6);
    ctx.fillStyle = frac >= 0.999 ? "#e5484d" : "#3dd68c";
    ctx.fillRect(x, height - 14 - h, barW, h);
    ctx.strokeStyle = "#555";
    ctx.strokeRect(x + 0.5, 0.5, barW - 1, height - 14);
    ctx.fillStyle = "#9aa";
    ctx.font = "9px monospace";
    ctx.fillText(tau[f].toFixed(2), x, height - 3);
  }
}

export function drawForceBendChart(
  ctx: CanvasRenderingContext2D, store: ConsoleStore, side: Side,
  width: number, height: number,
): void {
  const samples = store.forceHistory[side].toArray();
  ctx.clearRect(0, 0, width, height);
  ctx.strokeStyle = "#444";
  ctx.strokeRect(0.5, 0.5, width - 1, height - 1);
  if (samples.length < 2) return;
  const fmax = Math.max(1, ...samples.map((s) => Math.max(...s.force)));
  const colors = ["#f5a97f", "#8aadf4", "#a6da95", "#c6a0f6", "#eed49f"];
  for (let finger = 0; finger < 5; finger++) {
    ctx.strokeStyle = colors[finger];
    ctx.beginPath();
    let started = false;
    for (const s of samples) {
      const x = s.bend * (width - 8) + 4;
      const y = height - 4 - (s.force[finger] / fmax) * (height - 8);
      if (started) ctx.lineTo(x, y);
      else ctx.moveTo(x, y);
      started = true;
    }
    ctx.stroke();
  }
  ctx.fillStyle = "#9aa";
  ctx.font = "10px monospace";
  ctx.fillText(`peak ${fmax.toFixed(1)} N`, 6, 12);
}

export function drawPenGauge(
  ctx: CanvasRenderingContext2D, store: ConsoleStore, size: number,
): void {
  ctx.clearRect(0, 0, size, size);
  const pen = store.scene?.pen ?? null;
  const cx = size / 2;
  const cy = 10;
  ctx.strokeStyle = "#444";
  ctx.beginPath();
  ctx.arc(cx, cy, size * 0.8, 0, Math.PI);
  ctx.stroke();
  if (pen === null) {
    ctx.fillStyle = "#666";
    ctx.font = "11px monospace";
    ctx.fillText("no pen in scene", 8, size / 2);
    return;
  }
  const len = size * 0.78;
  const x = cx + len * Math.sin(pen.theta);
  const y = cy + len * Math.cos(pen.theta);
  ctx.strokeStyle = "#f5a97f";
  ctx.lineWidth = 3;
  ctx.beginPath();
  ctx.moveTo(cx, cy);
  ctx.lineTo(x, y);
  ctx.stroke();
  ctx.lineWidth = 1;
  ctx.fillStyle = "#ccc";
  ctx.font = "11px monospace";
  const deg = (pen.theta * 180) / Math.PI;
  ctx.fillText(`${deg.toFixed(1)} deg  ${pen.omega.toFixed(2)} rad/s`, 6,
               size - 6);
}

export function sceneReadout(store: ConsoleStore, side: Side): string {
  const scene = store.scene;
  if (!scene) return "no scene yet";
  const view = scene.sides[side];
  const p = view.ee_pos.map((v) => v.toFixed(3)).join(", ");
  const lines = [
    `t = ${scene.t.toFixed(2)} s`,
    `ee [${p}] m`,
    `bend [${view.bend.map((b) => b.toFixed(2)).join(" ")}]`,
    `indent ${view.indent_mm.toFixed(2)} mm`,
    `deformation ${scene.deform_total_mm.toFixed(2)} mm ` +
      `(${scene.deform_entries} entries)`,
  ];
  if (scene.objects.length) {
    lines.push("objects: " + scene.objects
      .map((o) => `${o.name}(${o.kind}, k=${o.stiffness})`).join(", "));
  }
  return lines.join("\n");
}

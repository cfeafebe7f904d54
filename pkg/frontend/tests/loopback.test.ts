// Integration against the real Python robot + bridge over TCP/WebSocket:
// widget-to-scene latency, torque clamping, and the feedback-mode toggle,
// all observed exactly the way the browser console observes them.

import { spawn, ChildProcess } from "node:child_process";
import * as path from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ConsoleStore } from "../src/state.js";
import { TORQUE_MAX } from "../src/types.js";
import { NodeWsClient } from "./wsclient.js";

const REPO_ROOT = path.resolve(__dirname, "..", "..");
const LAUNCHER = `
import socket, sys, threading
from teletact.bridge import run_bridge
from teletact.sessions import SessionConfig, run_robot

probe = socket.socket(); probe.bind(("127.0.0.1", 0))
robot_port = probe.getsockname()[1]; probe.close()
robot_cfg = SessionConfig(port=robot_port, duration_s=30.0, scene="hard_bottle",
                          clock="wall", accept_timeout_s=10.0)
bridge_cfg = SessionConfig(role="bridge", port=robot_port, duration_s=30.0,
                           scene="hard_bottle", clock="wall",
                           accept_timeout_s=10.0)
threading.Thread(target=lambda: run_robot(robot_cfg), daemon=True).start()
run_bridge(bridge_cfg, ready=lambda port: print(f"WSPORT {port}", flush=True))
`;

let proc: ChildProcess;
let client: NodeWsClient;
let store: ConsoleStore;

beforeAll(async () => {
  proc = spawn("python3", ["-c", LAUNCHER], {
    cwd: REPO_ROOT,
    stdio: ["ignore", "pipe", "inherit"],
  });
  const port = await new Promise<number>((resolve, reject) => {
    const timer = setTimeout(
      () => reject(new Error("bridge never reported its port")), 15000);
    proc.stdout!.on("data", (chunk: Buffer) => {
      const match = /WSPORT (\d+)/.exec(chunk.toString());
      if (match) {
        clearTimeout(timer);
        resolve(parseInt(match[1], 10));
      }
    });
    proc.on("exit", (code) =>
      reject(new Error(`bridge exited early with ${code}`)));
  });
  client = new NodeWsClient(port);
  await client.opened();
  store = new ConsoleStore();
}, 30000);

afterAll(() => {
  client?.close();
  proc?.kill("SIGKILL");
});

describe("console loopback through the live bridge", () => {
  it("reflects a widget change in the scene view within 100 ms", async () => {
    // Drain until the stream is flowing.
    await client.recvUntil((m) => m.type === "scene", 5000);
    const t0 = performance.now();
    client.sendJson({ type: "hand", side: "right",
                      bend: [1, 1, 1, 1, 1], split: 0.2 });
    const moved = await client.recvUntil(
      (m) => m.type === "scene" && m.sides.right.bend[0] > 0.01, 5000);
    const latency = performance.now() - t0;
    store.apply(moved);
    expect(latency).toBeLessThan(100);
  }, 20000);

  it("saturates the torque bars at the cap on a rigid object", async () => {
    const glove = await client.recvUntil(
      (m) => m.type === "glove" && m.side === "right" &&
             Math.max(...m.tau) > 0, 10000);
    store.apply(glove);
    expect(Math.max(...store.hands.right.tau)).toBeCloseTo(TORQUE_MAX, 9);

    const haptic = await client.recvUntil(
      (m) => m.type === "haptic" && m.side === "right" &&
             m.taxels[0].some((c: number) => c > 0), 5000);
    store.apply(haptic);
    // Displayed cells are exactly the wire counts.
    const shown = store.hands.right.taxels[0];
    expect(shown).toEqual(haptic.taxels[0]);
  }, 20000);

  it("zeroes torque display on visual_only while heatmaps continue", async () => {
    client.sendJson({ type: "feedback_mode", mode: "visual_only" });
    const zero = await client.recvUntil(
      (m) => m.type === "glove" && m.side === "right" &&
             m.feedback_mode === "visual_only", 5000);
    store.apply(zero);
    expect(store.hands.right.tau).toEqual([0, 0, 0, 0, 0]);

    const haptic = await client.recvUntil(
      (m) => m.type === "haptic" && m.side === "right" &&
             m.taxels[0].some((c: number) => c > 0), 5000);
    expect(haptic.seq).toBeGreaterThan(0);
  }, 20000);

  it("rejects malformed input without dropping the session", async () => {
    client.sendJson({ type: "warp_drive" });
    const err = await client.recvUntil((m) => m.type === "error", 5000);
    expect(err.message).toContain("warp_drive");
    await client.recvUntil((m) => m.type === "scene", 5000); // still alive
  }, 20000);
});

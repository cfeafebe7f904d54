// JSON message schemas mirroring the binary wire layouts field for field.
// The binary protocol (protocol.md) is the source of truth.

export type Side = "left" | "right";
export type FeedbackMode = "visual_plus_haptic" | "visual_only";

export const SIDES: Side[] = ["left", "right"];
export const FINGERS = ["thumb", "index", "middle", "ring", "little"];
export const TORQUE_MAX = 0.5; // N*m, glove motor cap
export const COUNTS_PER_NEWTON = 3000;

export interface SceneSideMsg {
  bend: number[];       // 5, achieved
  split: number;
  ee_pos: number[];     // 3, meters
  ee_rot: number[];     // 9, row-major
  force: number[];      // 5, newtons
  indent_mm: number;
  joints: number[];     // 7, radians
}

export interface SceneMsg {
  type: "scene";
  t: number;
  seq: number;
  t_us: number;
  sides: Record<Side, SceneSideMsg>;
  pen: { theta: number; omega: number } | null;
  deform_total_mm: number;
  deform_entries: number;
  objects: { name: string; kind: string; stiffness: number }[];
}

export interface HapticMsg {
  type: "haptic";
  side: Side;
  seq: number;
  t_us: number;
  taxels: number[][]; // 5 fingers x 16 counts, row-major
}

export interface GloveMsg {
  type: "glove";
  side: Side;
  seq: number;
  t_us: number;
  tau: number[]; // 5, N*m
  feedback_mode: FeedbackMode;
}

export interface ErrorMsg {
  type: "error";
  message: string;
}

export interface PongMsg {
  type: "pong";
  echo?: unknown;
}

export type InboundMsg = SceneMsg | HapticMsg | GloveMsg | ErrorMsg | PongMsg;

export interface WristOut {
  type: "wrist";
  side: Side;
  pos: number[]; // 3
  rpy: number[]; // 3
}

export interface HandOut {
  type: "hand";
  side: Side;
  bend: number[]; // 5 in [0,1]
  split: number;
}

export interface CalibrateOut {
  type: "calibrate";
  side?: Side;
}

export interface FeedbackModeOut {
  type: "feedback_mode";
  mode: FeedbackMode;
}

export type OutboundMsg = WristOut | HandOut | CalibrateOut | FeedbackModeOut;

"""Scripted operator policies.

Each controller stands in for a human operator: it emits wrist poses and
glove readings at the control rate and reacts to whatever feedback channel
its sensing mode grants it. Haptic sensing reads the rendered glove
torques (62 Hz, one period of latency); visual sensing reads the scene
stream (30 Hz) through a configurable observation delay and noise,
modeling the indirect reasoning the paper's visual-only condition forces
on the operator.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .haptics import DEFAULT_FORCE_ARM
from .retargeting import NUM_FINGERS
from .simworld import GRAVITY, PenState

IDENTITY = np.eye(3)


@dataclass(frozen=True)
class OperatorPolicy:
    """Serializable policy description used by session configs.

    kind selects the sensing channel (or a scripted replay); parameters
    model the operator: target grip force, the smallest indentation a
    human notices on screen, reaction delay, observation noise, and how
    aggressively they close the hand.
    """

    kind: str = "haptic_closed_loop"
    target_force: float = 1.0  # N
    visual_threshold_mm: float = 1.5
    obs_delay_s: float = 0.25
    obs_noise_mm: float = 0.3
    strategy: str = "aggressive"  # aggressive | conservative
    path: str | None = None  # scripted_trajectory waypoint file

    def __post_init__(self):
        if self.kind not in ("haptic_closed_loop", "visual_closed_loop",
                             "scripted_trajectory"):
            raise ValueError(f"unknown policy kind {self.kind!r}")
        if self.obs_delay_s < 0 or self.obs_noise_mm < 0:
            raise ValueError("delay and noise must be >= 0")
        if self.strategy not in ("aggressive", "conservative"):
            raise ValueError(f"unknown strategy {self.strategy!r}")


class Controller:
    """Base operator controller: stationary wrist, open hand."""

    sides = ("right",)

    def __init__(self):
        self.home_xy = {}
        self.force_arm = DEFAULT_FORCE_ARM
        self._result = {}

    def start(self, ctx: dict) -> None:
        """Called once before the first control tick with session context:
        homes (per-side robot home positions), haptic config, seed."""
        self.home_xy = {s: np.asarray(h.k_init[:2]) for s, h in ctx["homes"].items()}
        self.force_arm = ctx["haptics"].force_arm[0]

    def wrist_sample(self, side: str, t: float):
        return np.zeros(3), IDENTITY

    def hand_command(self, side: str, t: float):
        return (0.0,) * NUM_FINGERS, 0.0

    def on_glove(self, t: float, side: str, tau) -> None:
        pass

    def on_scene(self, t: float, scene) -> None:
        pass

    def done(self, t: float) -> bool:
        return False

    def result(self) -> dict:
        return dict(self._result)

    # Perceived per-finger force: what the operator's fingers feel through
    # the glove motors, inverted through the known force arm.
    def felt_forces(self, tau):
        return [ti / self.force_arm for ti in tau]


class DelayedScalar:
    """Observation channel with transport delay and per-sample noise,
    modeling a human reading a value off a screen."""

    def __init__(self, delay_s: float, noise: float, rng: np.random.Generator):
        self.delay_s = delay_s
        self.noise = noise
        self.rng = rng
        self._samples = []  # (t, noisy value)

    def push(self, t: float, value: float) -> None:
        noisy = value + (self.rng.normal(0.0, self.noise) if self.noise else 0.0)
        self._samples.append((t, noisy))
        if len(self._samples) > 4096:
            del self._samples[:2048]

    def read(self, t: float):
        """Latest sample old enough to have been perceived, else None."""
        cutoff = t - self.delay_s
        latest = None
        for ts, v in reversed(self._samples):
            if ts <= cutoff:
                latest = v
                break
        return latest


class ScriptedTrajectory(Controller):
    """Replay a recorded wrist/hand path: linear interpolation between
    timestamped waypoints. Stands in for live tracker input."""

    def __init__(self, waypoints, side: str = "right"):
        super().__init__()
        self.sides = (side,)
        if not waypoints:
            raise ValueError("trajectory needs at least one waypoint")
        self.waypoints = sorted(waypoints, key=lambda w: w["t"])

    @staticmethod
    def from_file(path, side: str = "right") -> "ScriptedTrajectory":
        import json
        with open(path) as fh:
            return ScriptedTrajectory(json.load(fh)["waypoints"], side=side)

    def _interp(self, t: float):
        ws = self.waypoints
        if t <= ws[0]["t"]:
            return ws[0], ws[0], 0.0
        if t >= ws[-1]["t"]:
            return ws[-1], ws[-1], 0.0
        for a, b in zip(ws, ws[1:]):
            if a["t"] <= t <= b["t"]:
                span = b["t"] - a["t"]
                u = 0.0 if span <= 0 else (t - a["t"]) / span
                return a, b, u
        return ws[-1], ws[-1], 0.0

    def wrist_sample(self, side: str, t: float):
        a, b, u = self._interp(t)
        pa = np.asarray(a.get("pos", (0, 0, 0)), dtype=float)
        pb = np.asarray(b.get("pos", (0, 0, 0)), dtype=float)
        return pa + u * (pb - pa), IDENTITY

    def hand_command(self, side: str, t: float):
        a, b, u = self._interp(t)
        ba = np.asarray(a.get("bend", (0,) * NUM_FINGERS), dtype=float)
        bb = np.asarray(b.get("bend", (0,) * NUM_FINGERS), dtype=float)
        sa = float(a.get("split", 0.0))
        sb = float(b.get("split", 0.0))
        bend = ba + u * (bb - ba)
        return tuple(bend), sa + u * (sb - sa)

    def done(self, t: float) -> bool:
        return t > self.waypoints[-1]["t"] + 0.1


class BendRamp(Controller):
    """Slowly close the hand with a stationary wrist; used to trace
    force-versus-bend curves."""

    def __init__(self, max_bend: float = 0.85, duration: float = 4.0,
                 split: float = 0.3):
        super().__init__()
        self.max_bend = max_bend
        self.duration = duration
        self.split = split

    def hand_command(self, side: str, t: float):
        u = min(1.0, max(0.0, t / self.duration))
        return (u * self.max_bend,) * NUM_FINGERS, self.split

    def done(self, t: float) -> bool:
        return t > self.duration + 0.2


class GraspController(Controller):
    """Close on an object until the stop signal fires, then hold.

    sensing="haptic" stops when any felt fingertip force reaches
    target_force; sensing="visual" stops when the delayed, noisy on-screen
    indentation reading crosses the visible threshold. The strategy picks
    the closing speed.
    """

    RATES = {"aggressive": 1.2, "conservative": 0.25}

    def __init__(self, sensing: str, strategy: str = "aggressive",
                 target_force: float = 1.0, visual_threshold_mm: float = 1.5,
                 obs_delay_s: float = 0.2, obs_noise_mm: float = 0.3,
                 seed: int = 0, start_delay: float = 0.1, hold_time: float = 0.4,
                 timeout: float = 20.0):
        super().__init__()
        if sensing not in ("haptic", "visual"):
            raise ValueError(f"unknown sensing {sensing!r}")
        self.sensing = sensing
        self.rate = self.RATES[strategy]
        self.target_force = target_force
        self.visual_threshold_mm = visual_threshold_mm
        self.start_delay = start_delay
        self.hold_time = hold_time
        self.timeout = timeout
        self.rng = np.random.default_rng(seed)
        self.obs = DelayedScalar(obs_delay_s, obs_noise_mm, self.rng)
        self.stop_t = None
        self._bend = 0.0
        self._felt_max = 0.0

    def hand_command(self, side: str, t: float):
        if self.stop_t is None:
            if t >= self.start_delay:
                if self.sensing == "visual":
                    seen = self.obs.read(t)
                    if seen is not None and seen >= self.visual_threshold_mm:
                        self.stop_t = t
                if self.stop_t is None and t - self.start_delay > 0:
                    self._bend = min(1.0, self.rate * (t - self.start_delay))
            if self.stop_t is None and t > self.timeout:
                self.stop_t = t  # give up; grasp likely failed
        return (self._bend,) * NUM_FINGERS, 0.3

    def on_glove(self, t: float, side: str, tau) -> None:
        if self.sensing != "haptic" or self.stop_t is not None:
            return
        felt = max(self.felt_forces(tau))
        self._felt_max = max(self._felt_max, felt)
        if felt >= self.target_force:
            self.stop_t = t

    def on_scene(self, t: float, scene) -> None:
        side_view = scene.right if self.sides[0] == "right" else scene.left
        self.obs.push(t, side_view.indent_mm)

    def done(self, t: float) -> bool:
        if self.stop_t is None:
            return False
        if t >= self.stop_t + self.hold_time:
            self._result = {
                "completion_time": self.stop_t - self.start_delay,
                "stopped": True,
            }
            return True
        return False


class ProbeGraspController(Controller):
    """Blind grasping with haptic probing: sweep the box with a lightly
    closed hand until a fingertip feels contact, hill-climb the felt force
    to center on the hidden object, then close."""

    def __init__(self, box_bounds, probe_bend: float = 0.37, sweep_speed: float = 0.8,
                 lane_pitch: float = 0.045, touch_force: float = 0.3,
                 refine_step: float = 0.010, settle: float = 0.04, seed: int = 0):
        super().__init__()
        self.bounds = box_bounds  # (x0, x1, y0, y1) in the robot frame
        self.probe_bend = probe_bend
        self.sweep_speed = sweep_speed
        self.touch_force = touch_force
        self.refine_step = refine_step
        self.settle = settle
        self.rng = np.random.default_rng(seed)
        x0, x1, y0, y1 = box_bounds
        lanes = max(2, int(math.ceil((y1 - y0) / lane_pitch)) + 1)
        ys = np.linspace(y0 + 0.005, y1 - 0.005, lanes)
        path = []
        for i, y in enumerate(ys):
            xs = (x0 + 0.005, x1 - 0.005) if i % 2 == 0 else (x1 - 0.005, x0 + 0.005)
            path.append((xs[0], y))
            path.append((xs[1], y))
        self.path = path
        self.phase = "sweep"
        self.pos = None  # starts at the robot home, set in start()
        self.path_idx = 0
        self._bend = probe_bend
        self.felt = 0.0
        self.wait_until = 0.0
        self.probe_targets = []
        self.probe_readings = []
        self.center = None
        self.done_t = None
        self.refine_axis = 0

    def start(self, ctx: dict) -> None:
        super().start(ctx)
        self.home = np.array([*self.home_xy["right"], 0.0])
        # The wrist path begins at the home pose so the t=0 calibration
        # sample is the rest pose.
        self.pos = self.home.copy()

    def _goto(self, target, dt: float) -> bool:
        """Move toward target at sweep speed; True when arrived."""
        delta = target - self.pos
        dist = float(np.linalg.norm(delta))
        step = self.sweep_speed * dt
        if dist <= step:
            self.pos = target.copy()
            return True
        self.pos = self.pos + delta * (step / dist)
        return False

    def wrist_sample(self, side: str, t: float):
        return self.pos - self.home, IDENTITY

    def hand_command(self, side: str, t: float):
        dt = 0.002
        if self.phase == "sweep":
            target = np.array([*self.path[self.path_idx], 0.0])
            if self.felt >= self.touch_force:
                self.phase = "refine"
                self._begin_refine()
            elif self._goto(target, dt):
                self.path_idx += 1
                if self.path_idx >= len(self.path):
                    self.phase = "fail"  # swept everything, never touched
                    self.done_t = t
        elif self.phase == "refine":
            self._refine(t, dt)
        elif self.phase == "close":
            # Fingers stall on the object well before 0.55 commanded bend.
            self._bend = min(0.55, self._bend + 1.8 * dt)
            if self._bend >= 0.55 and self.done_t is None:
                self.done_t = t + 0.2
        return (self._bend,) * NUM_FINGERS, 0.3

    def _begin_refine(self) -> None:
        """Probe a line of offsets around the touch point, one axis at a
        time, and move to the strongest reading."""
        self.refine_axis = 0
        self.anchor = self.pos.copy()
        self._queue_axis_probes()

    def _queue_axis_probes(self) -> None:
        offs = (-2, -1, 0, 1, 2)
        axis = self.refine_axis
        self.probe_targets = []
        for k in offs:
            p = self.anchor.copy()
            p[axis] += k * self.refine_step
            self.probe_targets.append(p)
        self.probe_idx = 0
        self.probe_readings = []
        self._arrived = False

    def _refine(self, t: float, dt: float) -> None:
        if self.probe_idx >= len(self.probe_targets):
            best = int(np.argmax(self.probe_readings))
            self.anchor = self.probe_targets[best].copy()
            self.refine_axis += 1
            if self.refine_axis >= 2:
                self.pos = self.anchor.copy()
                self.phase = "close"
                return
            self._queue_axis_probes()
            return
        target = self.probe_targets[self.probe_idx]
        if not self._arrived:
            if self._goto(target, dt):
                self._arrived = True
                self.wait_until = t + self.settle
            return
        if t >= self.wait_until:
            self.probe_readings.append(self.felt)
            self.probe_idx += 1
            self._arrived = False

    def on_glove(self, t: float, side: str, tau) -> None:
        self.felt = max(self.felt_forces(tau))

    def done(self, t: float) -> bool:
        if self.done_t is not None and t >= self.done_t:
            self._result = {"phase": self.phase, "completion_time": t}
            return True
        return False


class NominalGraspController(Controller):
    """No-feedback baseline for blind grasping: reach the box's nominal
    center and close."""

    def __init__(self, box_center):
        super().__init__()
        self.center = np.array([box_center[0], box_center[1], 0.0])
        self._bend = 0.0
        self.done_t = None

    def start(self, ctx: dict) -> None:
        super().start(ctx)
        self.home = np.array([*self.home_xy["right"], 0.0])
        self.pos = self.home.copy()

    def wrist_sample(self, side: str, t: float):
        delta = self.center - self.pos
        dist = float(np.linalg.norm(delta))
        step = 0.5 * 0.002
        if dist > step:
            self.pos = self.pos + delta * (step / dist)
        else:
            self.pos = self.center.copy()
        return self.pos - self.home, IDENTITY

    def hand_command(self, side: str, t: float):
        if np.allclose(self.pos, self.center):
            self._bend = min(0.55, self._bend + 1.8 * 0.002)
            if self._bend >= 0.55 and self.done_t is None:
                self.done_t = t + 0.2
        return (self._bend,) * NUM_FINGERS, 0.3

    def done(self, t: float) -> bool:
        return self.done_t is not None and t >= self.done_t


class PenSlideController(Controller):
    """Regulate grip force so gravity walks the pen through intermediate
    angle targets and stops at the final one.

    Haptic sensing measures the true squeeze through the glove, so a
    continuous computed-torque slip law tracks a smooth descent. Visual
    sensing faces a plant faster than its observation delay, so it works
    the way a careful human does: short release pulses, re-clamp, watch
    the delayed result, and recalibrate a mis-calibrated grip model as it
    goes.
    """

    def __init__(self, sensing: str, pen: PenState, grip_stiffness: float,
                 grip_contact_bend: float = 0.40,
                 targets_deg=(35.0, 60.0, 85.0), tol_deg: float = 5.0,
                 obs_delay_s: float = 0.25, obs_noise_mm: float = 0.3,
                 seed: int = 0, timeout: float = 30.0):
        super().__init__()
        if sensing not in ("haptic", "visual"):
            raise ValueError(f"unknown sensing {sensing!r}")
        self.sensing = sensing
        self.pen = pen
        self.k_grip = grip_stiffness
        self.cb = grip_contact_bend
        self.targets = [math.radians(d) for d in targets_deg]
        self.tol = math.radians(tol_deg)
        self.timeout = timeout
        self.rng = np.random.default_rng(seed)
        visual = sensing == "visual"
        self.theta_obs = DelayedScalar(
            obs_delay_s if visual else 0.0,
            math.radians(0.6) * (obs_noise_mm if visual else 0.0), self.rng)
        self.omega_obs = DelayedScalar(
            obs_delay_s if visual else 0.0,
            0.15 * (obs_noise_mm if visual else 0.0), self.rng)
        # The operator's internal bend-to-force model is off by a per-trial
        # factor; only watching outcomes (or feeling the glove) reveals it.
        self.gain_error = float(self.rng.uniform(0.65, 1.45)) if visual else 1.0
        self.grip_trim = 1.0
        self.stage = 0
        self.missed_stage = False
        self.hold_since = None
        self.felt_grip = 0.0
        self._bend = grip_contact_bend + 0.1  # matches the held start pose
        self.finish_t = None
        self.dropped = False
        self.theta_latest = pen.theta
        self.omega_latest = 0.0
        # visual pulse machinery
        self.pulse_state = "observe"
        self.state_until = obs_delay_s + 0.15
        self.theta_before_pulse = pen.theta

    def grip_hold(self, theta: float) -> float:
        """Squeeze force that exactly balances gravity torque at theta."""
        tau_g = self.pen.mass * GRAVITY * self.pen.com_dist * abs(math.sin(theta))
        return tau_g / (self.pen.mu * self.pen.contact_radius)

    def _bend_for_grip(self, grip: float) -> float:
        # squeeze = 2 * min(thumb, others); with equal commanded indents
        # and the thumb the weaker group, grip ~= 2 * k * indent.
        indent = grip / (2.0 * self.k_grip) * self.gain_error * self.grip_trim
        return self.cb + max(0.004, indent)

    def _advance_stage(self, t: float) -> None:
        self.stage += 1
        self.hold_since = None
        if self.stage >= len(self.targets) and self.finish_t is None:
            self.finish_t = t

    def _skip_overshot(self, theta: float) -> None:
        while (self.stage < len(self.targets)
               and theta > self.targets[self.stage] + self.tol):
            self.missed_stage = True
            self.stage += 1

    def hand_command(self, side: str, t: float):
        if self.finish_t is None and t > self.timeout:
            self.finish_t = t
            self.dropped = True
        if self.finish_t is not None or self.stage >= len(self.targets):
            if self.finish_t is None:
                self.finish_t = t
            return (self._bend, self._bend, self._bend, 0.0, 0.0), 0.0
        if self.sensing == "haptic":
            self._command_haptic(t)
        else:
            self._command_visual(t)
        return (self._bend, self._bend, self._bend, 0.0, 0.0), 0.0

    def _command_haptic(self, t: float) -> None:
        theta, omega = self.theta_latest, self.omega_latest
        target = self.targets[self.stage]
        err = target - theta
        if abs(err) <= self.tol * 0.5 and abs(omega) <= 0.15:
            if self.hold_since is None:
                self.hold_since = t
            elif t - self.hold_since >= 0.25:
                self._advance_stage(t)
            desired = self.grip_hold(max(theta, 0.05)) * 2.0
        else:
            self.hold_since = None
            # Computed-torque slip control: target a descent speed from
            # the angle error, realize it through friction torque.
            omega_des = min(0.5, max(0.0, 2.5 * err))
            tau_g = (self.pen.mass * GRAVITY * self.pen.com_dist
                     * math.sin(max(theta, 0.05)))
            tau_net = self.pen.inertia * 25.0 * (omega_des - omega)
            tau_f = tau_g - tau_net
            desired = max(0.0, tau_f / (self.pen.mu * self.pen.contact_radius))
            desired = min(desired, self.grip_hold(max(theta, 0.05)) * 3.0)
        if self.felt_grip > 0.0:
            desired += 0.5 * (desired - self.felt_grip)
        self._bend = self._bend_for_grip(max(desired, 0.0))

    # Visual pulse cadence and the per-pulse rotation band the operator
    # aims for while ratcheting the pen downward.
    PULSE_S = 0.12
    OBSERVE_S = 0.38
    STEP_LO = math.radians(1.2)
    STEP_HI = math.radians(5.0)

    def _command_visual(self, t: float) -> None:
        theta = self.theta_obs.read(t)
        theta = theta if theta is not None else self.pen.theta
        self._skip_overshot(theta)
        if self.stage >= len(self.targets):
            return
        target = self.targets[self.stage]
        err = target - theta
        hold = self.grip_hold(max(theta, 0.05))
        if self.pulse_state == "observe":
            self._bend = self._bend_for_grip(hold * 1.8)
            if t >= self.state_until:
                moved = theta - self.theta_before_pulse
                # Recalibrate: a dead pulse means the model over-grips; a
                # lurch means it under-grips.
                if moved < self.STEP_LO * 0.5:
                    self.grip_trim = max(0.35, self.grip_trim * 0.85)
                elif moved > self.STEP_HI:
                    self.grip_trim = min(3.0, self.grip_trim * 1.2)
                if abs(err) <= self.tol * 0.7:
                    if self.hold_since is None:
                        self.hold_since = t
                    elif t - self.hold_since >= 0.25:
                        self._advance_stage(t)
                    return
                self.hold_since = None
                self.theta_before_pulse = theta
                self.pulse_state = "pulse"
                self.state_until = t + self.PULSE_S
        else:
            # Release to a fraction of the believed hold force; shallower
            # when the target is close.
            frac = 0.88 if err < math.radians(8.0) else 0.80
            self._bend = self._bend_for_grip(hold * frac)
            if t >= self.state_until:
                self.pulse_state = "observe"
                self.state_until = t + self.OBSERVE_S

    def on_glove(self, t: float, side: str, tau) -> None:
        if self.sensing != "haptic":
            return
        forces = self.felt_forces(tau)
        others = forces[1] + forces[2] + forces[3] + forces[4]
        self.felt_grip = 2.0 * min(forces[0], others)

    def on_scene(self, t: float, scene) -> None:
        if scene.pen is None:
            return
        theta, omega = scene.pen
        self.theta_latest = theta
        self.omega_latest = omega
        self.theta_obs.push(t, theta)
        self.omega_obs.push(t, omega)
        if theta > math.radians(109.0) and self.finish_t is None:
            self.dropped = True
            self.finish_t = t

    def done(self, t: float) -> bool:
        if self.finish_t is None:
            return False
        if t >= self.finish_t + 0.1:
            success = (not self.dropped and not self.missed_stage
                       and self.stage >= len(self.targets))
            self._result = {
                # Failed trials never complete; censor them at the timeout.
                "completion_time": self.finish_t if success else self.timeout,
                "success": success,
                "dropped": self.dropped,
            }
            return True
        return False


def build_controller(policy: OperatorPolicy, scene_name: str, scene,
                     seed: int = 0) -> Controller:
    """Resolve a serializable policy spec against the scene it will drive."""
    if policy.kind == "scripted_trajectory":
        if not policy.path:
            raise ValueError("scripted_trajectory needs a waypoint file path")
        return ScriptedTrajectory.from_file(policy.path)
    sensing = "haptic" if policy.kind == "haptic_closed_loop" else "visual"
    if scene is not None and scene.pen is not None:
        grip_obj = scene.objects.get(scene.pen_side)
        return PenSlideController(
            sensing, scene.pen, grip_obj.stiffness, grip_obj.contact_bend[0],
            obs_delay_s=policy.obs_delay_s, obs_noise_mm=policy.obs_noise_mm,
            seed=seed)
    return GraspController(
        sensing, strategy=policy.strategy, target_force=policy.target_force,
        visual_threshold_mm=policy.visual_threshold_mm,
        obs_delay_s=policy.obs_delay_s, obs_noise_mm=policy.obs_noise_mm,
        seed=seed)

"""Executable session runtimes: robot-side server, operator-side client,
and the deterministic in-process loopback that wires both ends of a real
TCP connection to one simulated clock.

The loopback is how tests and experiments run: a merged multi-rate event
schedule (500 Hz control, 62 Hz haptic, 30 Hz scene) advances a simulated
clock, and every message still crosses an actual socket through the wire
codec. Wall-clock pacing exists for live use behind an explicit config
flag.
"""
from __future__ import annotations

import json
import os
import socket
import time as wallclock
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import logs, protocol
from .geometry import Pose, rot_x, rot_y, rot_z
from .haptics import GloveCommand, HapticConfig, render_frame
from .kinematics import ArmModel, IkTracker, arm_from_dict, default_arm
from .policies import Controller, OperatorPolicy, build_controller
from .protocol import (Control, FrameBuffer, Glove, Haptic, Hello, LatestWins,
                       RateSpec, Scene, SceneSide, TargetRecord, WristRecord,
                       tick_schedule)
from .retargeting import (RetargetConfig, RobotHome, WristSample, calibrate,
                          map_hand, relative_pose)
from .simworld import SimScene, build_scene, grasp_success, scene_from_dict

STALENESS_TIMEOUT_S = 0.1  # glove torques zero after this without haptics

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NETWORK = 3


class BindFailure(OSError):
    pass


class ConnectFailure(OSError):
    pass


class PeerLost(ConnectionError):
    pass


@dataclass(frozen=True)
class SessionConfig:
    role: str = "robot"
    host: str = "127.0.0.1"
    port: int = 0  # 0 = ephemeral, for loopback runs
    bridge_host: str = "127.0.0.1"
    bridge_port: int = 0
    rates: RateSpec = field(default_factory=RateSpec)
    retarget: RetargetConfig = field(default_factory=RetargetConfig)
    haptics: HapticConfig = field(default_factory=HapticConfig)
    arm: ArmModel | None = None
    scene: object = "soft_bottle"  # name or dict
    feedback_mode: str = "visual_plus_haptic"
    seed: int = 0
    clock: str = "simulated"  # simulated | wall
    duration_s: float = 10.0
    accept_timeout_s: float = 3.0
    log_path: str | None = None
    solve_arm_ik: bool = True

    def __post_init__(self):
        if self.role not in ("robot", "operator", "bridge"):
            raise ValueError(f"unknown role {self.role!r}")
        if self.feedback_mode not in ("visual_only", "visual_plus_haptic"):
            raise ValueError(f"unknown feedback mode {self.feedback_mode!r}")
        if self.clock not in ("simulated", "wall"):
            raise ValueError(f"unknown clock {self.clock!r}")
        if not (0 <= self.port <= 65535):
            raise ValueError(f"bad port {self.port}")

    def build_scene(self) -> SimScene:
        if isinstance(self.scene, str):
            return build_scene(self.scene, seed=self.seed, retarget=self.retarget)
        return scene_from_dict(self.scene, retarget=self.retarget)

    def arm_model(self) -> ArmModel:
        return self.arm or default_arm()


def _home_from_dict(d: dict) -> RobotHome:
    rot = np.eye(3)
    if "rpy" in d:
        r, p, y = d["rpy"]
        rot = rot_z(y) @ rot_y(p) @ rot_x(r)
    return RobotHome(np.asarray(d.get("pos", (0.45, -0.25, 0.10)), dtype=float), rot)


def config_from_dict(raw: dict) -> SessionConfig:
    """Build a SessionConfig from the JSON schema documented in the README.
    TELETACT_HOST / TELETACT_PORT environment variables override the
    endpoint."""
    kw = {}
    for key in ("role", "host", "port", "feedback_mode", "seed", "clock",
                "duration_s", "accept_timeout_s", "log_path", "scene",
                "bridge_host", "bridge_port", "solve_arm_ik"):
        if key in raw:
            kw[key] = raw[key]
    if "rates" in raw:
        kw["rates"] = RateSpec(**raw["rates"])
    if "retarget" in raw:
        r = raw["retarget"]
        homes = {side: _home_from_dict(h)
                 for side, h in r.get("homes", {}).items()}
        base = RetargetConfig()
        kw["retarget"] = RetargetConfig(scale=float(r.get("scale", 1.0)),
                                        homes={**base.homes, **homes})
    if "haptics" in raw:
        h = raw["haptics"]
        arm = h.get("force_arm", 0.04)
        arms = tuple(arm) if isinstance(arm, (list, tuple)) else (float(arm),) * 5
        kw["haptics"] = HapticConfig(force_arm=arms,
                                     torque_max=float(h.get("torque_max", 0.5)))
    if "arm" in raw and raw["arm"] != "default":
        kw["arm"] = arm_from_dict(raw["arm"])
    host = os.environ.get("TELETACT_HOST")
    port = os.environ.get("TELETACT_PORT")
    if host:
        kw["host"] = host
    if port:
        kw["port"] = int(port)
    return SessionConfig(**kw)


def config_from_file(path) -> SessionConfig:
    with open(path) as fh:
        return config_from_dict(json.load(fh))


def policy_from_dict(raw: dict) -> OperatorPolicy:
    return OperatorPolicy(**raw)


@dataclass
class SessionReport:
    role: str
    duration_s: float = 0.0
    sent: dict = field(default_factory=dict)
    received: dict = field(default_factory=dict)
    drops: dict = field(default_factory=dict)
    bad_frames: int = 0
    stale_events: int = 0
    errors: list = field(default_factory=list)
    task: dict = field(default_factory=dict)
    log: logs.SessionLog = field(default_factory=logs.SessionLog)

    @property
    def log_digest(self) -> str:
        return self.log.digest()

    def summary(self) -> dict:
        return {
            "role": self.role,
            "duration_s": self.duration_s,
            "sent": dict(self.sent),
            "received": dict(self.received),
            "drops": dict(self.drops),
            "bad_frames": self.bad_frames,
            "stale_events": self.stale_events,
            "errors": list(self.errors),
            "task": dict(self.task),
            "log_sha256": self.log_digest,
            "log_records": self.log.count,
        }


_TYPE_NAMES = {
    protocol.MSG_HELLO: "hello", protocol.MSG_CONTROL: "control",
    protocol.MSG_HAPTIC: "haptic", protocol.MSG_SCENE: "scene",
    protocol.MSG_GLOVE: "glove", protocol.MSG_WRIST: "wrist",
    protocol.MSG_TARGET: "target",
}

_MSG_NAME = {
    Hello: "hello", Control: "control", Haptic: "haptic",
    Scene: "scene", Glove: "glove", WristRecord: "wrist",
    TargetRecord: "target",
}


class Wire:
    """One duplex connection endpoint: counted sends, drained receives,
    both logged as raw frames.

    In the in-process loopback, `peer` points at the other endpoint and
    drain blocks until every byte the peer has already sent has arrived.
    Loopback TCP delivery is asynchronous by a few microseconds (softirq),
    and without this barrier a frame could slip past its scheduled drain,
    making runs non-reproducible.
    """

    def __init__(self, sock: socket.socket, report: SessionReport):
        self.sock = sock
        self.sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        self.fb = FrameBuffer()
        self.report = report
        self.closed = False
        self.peer: Wire | None = None
        self.bytes_sent = 0
        self.bytes_received = 0

    def pair_with(self, other: "Wire") -> None:
        self.peer = other
        other.peer = self
        self.sock.settimeout(2.0)
        other.sock.settimeout(2.0)

    def send(self, msg, tick: int) -> None:
        data = protocol.encode(msg)
        name = _MSG_NAME[type(msg)]
        self.report.sent[name] = self.report.sent.get(name, 0) + 1
        self.report.log.append(logs.SENT, tick, data)
        try:
            self.sock.sendall(data)
            self.bytes_sent += len(data)
        except (BrokenPipeError, ConnectionResetError) as err:
            self.closed = True
            raise PeerLost(str(err)) from err

    def _feed(self, chunk: bytes) -> None:
        if not chunk:
            self.closed = True
            raise PeerLost("peer closed the connection")
        self.bytes_received += len(chunk)
        self.fb.feed(chunk)

    def drain(self, tick: int) -> list:
        """Read everything sent up to now and return the messages."""
        if self.peer is not None:
            # Loopback: the peer's byte counter says exactly how much to
            # expect, so read precisely that (blocking, with the timeout
            # installed by pair_with) and no more. This wastes no syscalls
            # and makes delivery timing deterministic.
            if self.bytes_received >= self.peer.bytes_sent:
                return []
            try:
                while self.bytes_received < self.peer.bytes_sent:
                    self._feed(self.sock.recv(
                        self.peer.bytes_sent - self.bytes_received))
            except socket.timeout as err:
                raise PeerLost("loopback peer bytes never arrived") from err
            except (ConnectionResetError, OSError) as err:
                self.closed = True
                raise PeerLost(str(err)) from err
        else:
            while True:
                try:
                    self._feed(self.sock.recv(65536, socket.MSG_DONTWAIT))
                except (BlockingIOError, InterruptedError):
                    break
                except (ConnectionResetError, OSError) as err:
                    self.closed = True
                    raise PeerLost(str(err)) from err
        out = []
        while (got := self.fb.pop_raw()) is not None:
            msg, raw = got
            name = _MSG_NAME[type(msg)]
            self.report.received[name] = self.report.received.get(name, 0) + 1
            self.report.log.append(logs.RECEIVED, tick, raw)
            out.append(msg)
        self.report.bad_frames = self.fb.bad_frames
        return out


class RobotRuntime:
    """Robot-side core loop: consume latest controls, step the world,
    publish haptic frames and scene snapshots."""

    def __init__(self, cfg: SessionConfig, wire: Wire, scene: SimScene | None = None):
        self.cfg = cfg
        self.wire = wire
        self.scene = scene or cfg.build_scene()
        self.ctrl_box = {s: LatestWins() for s in ("left", "right")}
        self.haptic_seq = {s: 0 for s in ("left", "right")}
        self.scene_seq = 0
        self.active_sides = []
        self.dt = 1.0 / cfg.rates.control_hz
        self.trackers = None
        if cfg.solve_arm_ik:
            arm = cfg.arm_model()
            self.trackers = {s: IkTracker(arm) for s in ("left", "right")}
        self._joints = {s: (0.0,) * 7 for s in ("left", "right")}

    def _dispatch(self, tick: int) -> None:
        for msg in self.wire.drain(tick):
            if isinstance(msg, Control):
                self.ctrl_box[msg.side].put(msg)
                if msg.side not in self.active_sides:
                    self.active_sides.append(msg.side)

    def control_tick(self, t_us: int, tick: int) -> None:
        self._dispatch(tick)
        controls = {}
        fresh = []
        for side, box in self.ctrl_box.items():
            msg = box.take()
            if msg is not None:
                controls[side] = (msg.rel, msg.hand)
                fresh.append(side)
        self.scene.step(controls, self.dt, want_frames=False)
        for side in fresh:
            target = self.scene.sides[side].target
            self.wire.report.log.append_message(
                logs.LOCAL, tick,
                TargetRecord(side=side, k_now=tuple(target.k_now),
                             q_gn=tuple(target.q_gn.reshape(9)),
                             seq=tick, t_us=t_us))

    def haptic_tick(self, t_us: int, tick: int) -> None:
        self._dispatch(tick)
        for side in self.active_sides:
            self.haptic_seq[side] += 1
            frame = self.scene.make_frame(side, seq=self.haptic_seq[side],
                                          t_us=t_us)
            self.wire.send(Haptic(side=side, frame=frame), tick)

    def scene_tick(self, t_us: int, tick: int) -> None:
        self._dispatch(tick)
        self.scene_seq += 1
        self.wire.send(self.snapshot(self.scene_seq, t_us), tick)

    def snapshot(self, seq: int, t_us: int) -> Scene:
        views = {}
        for side, state in self.scene.sides.items():
            if self.trackers is not None:
                q = self.trackers[side].track(
                    Pose(state.target.k_now, state.target.q_gn))
                self._joints[side] = tuple(q)
            views[side] = SceneSide(
                bend=tuple(state.bend), split=state.split,
                ee_pos=tuple(state.target.k_now),
                ee_rot=tuple(state.target.q_gn.reshape(9)),
                force=tuple(state.forces), indent_mm=state.indent_mm,
                joints=self._joints[side])
        pen = None
        if self.scene.pen is not None:
            pen = (self.scene.pen.theta, self.scene.pen.omega)
        objects = tuple(
            (obj.name, obj.kind, obj.stiffness)
            for _, obj in sorted(self.scene.objects.items()))
        return Scene(t=self.scene.time, left=views["left"], right=views["right"],
                     pen=pen, deform_total_mm=self.scene.ledger.total,
                     deform_entries=len(self.scene.ledger.entries),
                     objects=objects, seq=seq, t_us=t_us)

    def finish(self) -> None:
        self.scene.finalize_deformation()
        report = self.wire.report
        report.drops = {side: box.drops for side, box in self.ctrl_box.items()}
        task = {
            "deform_total_mm": self.scene.ledger.total,
            "deform_entries": len(self.scene.ledger.entries),
        }
        for side, obj in self.scene.objects.items():
            if obj.kind != "pen":
                task[f"grasp_success_{side}"] = grasp_success(self.scene, obj, side)
            task[f"forces_{side}"] = list(self.scene.sides[side].forces)
        if self.scene.pen is not None:
            task["pen_theta"] = self.scene.pen.theta
            task["pen_omega"] = self.scene.pen.omega
        report.task.update(task)


class OperatorRuntime:
    """Operator-side core loop: calibrate at t=0, stream controls, render
    glove torques from the haptic stream, feed the policy its senses."""

    def __init__(self, cfg: SessionConfig, wire: Wire, controller: Controller):
        self.cfg = cfg
        self.wire = wire
        self.controller = controller
        self.calib = {}
        self.ctrl_seq = {s: 0 for s in ("left", "right")}
        self.glove_seq = {s: 0 for s in ("left", "right")}
        self.haptic_box = {s: LatestWins() for s in ("left", "right")}
        self.scene_box = LatestWins()
        self.last_haptic_rx_us = {s: None for s in ("left", "right")}
        self.stale = {s: False for s in ("left", "right")}
        self.staleness_us = int(STALENESS_TIMEOUT_S * 1e6)
        self.glove_listener = None  # bridge hook

    def _dispatch(self, t_us: int, tick: int) -> None:
        for msg in self.wire.drain(tick):
            if isinstance(msg, Haptic):
                self.haptic_box[msg.side].put(msg)
                self.last_haptic_rx_us[msg.side] = t_us
            elif isinstance(msg, Scene):
                self.scene_box.put(msg)

    def control_tick(self, t_us: int, tick: int) -> None:
        self._dispatch(t_us, tick)
        scene_msg = self.scene_box.take()
        if scene_msg is not None:
            self.controller.on_scene(t_us * 1e-6, scene_msg)
        t = t_us * 1e-6
        for side in self.controller.sides:
            pos, rot = self.controller.wrist_sample(side, t)
            sample = WristSample(p_now=pos, r_gn=rot, t_us=t_us)
            if side not in self.calib:
                self.calib[side] = calibrate(sample)
            rel = relative_pose(self.calib[side], sample)
            bend, split = self.controller.hand_command(side, t)
            hand = map_hand(bend, split)
            self.ctrl_seq[side] += 1
            self.wire.report.log.append_message(
                logs.LOCAL, tick,
                WristRecord(side=side, p_now=tuple(sample.p_now),
                            r_gn=tuple(sample.r_gn.reshape(9)),
                            seq=self.ctrl_seq[side], t_us=t_us))
            self.wire.send(Control(side=side, rel=rel, hand=hand,
                                   seq=self.ctrl_seq[side], t_us=t_us), tick)

    def haptic_tick(self, t_us: int, tick: int) -> None:
        self._dispatch(t_us, tick)
        if self.cfg.feedback_mode != "visual_plus_haptic":
            return  # visual only: the stream still flows, nothing renders
        t = t_us * 1e-6
        for side in self.controller.sides:
            latest = self.haptic_box[side].take() or self.haptic_box[side].peek()
            rx = self.last_haptic_rx_us[side] or 0  # session start counts as fresh
            is_stale = (t_us - rx) > self.staleness_us
            if is_stale:
                if not self.stale[side]:
                    self.wire.report.stale_events += 1
                self.stale[side] = True
                command = GloveCommand.zero()
            else:
                self.stale[side] = False
                if latest is None:
                    continue
                command = render_frame(latest.frame, self.cfg.haptics)
            self.glove_seq[side] += 1
            glove = Glove(side=side, tau=command.tau,
                          seq=self.glove_seq[side], t_us=t_us)
            self.wire.report.log.append_message(logs.LOCAL, tick, glove)
            self.wire.report.sent["glove"] = self.wire.report.sent.get("glove", 0) + 1
            if self.glove_listener is not None:
                self.glove_listener(glove)
            self.controller.on_glove(t, side, command.tau)

    def finish(self) -> None:
        report = self.wire.report
        report.drops = {
            **{f"haptic_{s}": b.drops for s, b in self.haptic_box.items()},
            "scene": self.scene_box.drops,
        }
        report.task.update(self.controller.result())


# Event phases at equal timestamps: operator command first, robot consumes
# it, robot publishes, operator renders. Deterministic by construction.
PH_OP_CONTROL = 0
PH_ROBOT_CONTROL = 1
PH_ROBOT_HAPTIC = 2
PH_OP_HAPTIC = 3
PH_ROBOT_SCENE = 4


def merged_schedule(duration_s: float, phases) -> list:
    """Merged (t_us, phase) event list, sorted by time then phase order.
    Cached: experiment suites rebuild the same schedule hundreds of times."""
    return _merged_schedule_cached(duration_s, tuple(phases))


@lru_cache(maxsize=32)
def _merged_schedule_cached(duration_s: float, phases: tuple) -> list:
    events = []
    for phase, hz in phases:
        ts = tick_schedule(hz, duration_s)
        events.extend((int(round(t * 1e6)), phase) for t in ts)
    events.sort()
    return events


def _loopback_pair(host: str = "127.0.0.1"):
    srv = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    srv.bind((host, 0))
    srv.listen(1)
    cli = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    cli.connect(srv.getsockname())
    conn, _ = srv.accept()
    srv.close()
    return conn, cli


def run_loopback(cfg: SessionConfig, controller: Controller,
                 scene: SimScene | None = None):
    """Run robot and operator against each other over a real TCP loopback
    connection under the simulated clock. Returns (robot_report,
    operator_report), both deterministic for a fixed seed/config."""
    robot_sock, op_sock = _loopback_pair(cfg.host)
    robot_report = SessionReport(role="robot")
    op_report = SessionReport(role="operator")
    try:
        robot = RobotRuntime(cfg, Wire(robot_sock, robot_report), scene=scene)
        operator = OperatorRuntime(cfg, Wire(op_sock, op_report), controller)
        robot.wire.pair_with(operator.wire)
        controller.start({"homes": cfg.retarget.homes, "haptics": cfg.haptics,
                          "rates": cfg.rates, "seed": cfg.seed})
        operator.wire.send(Hello(role="operator", rates=cfg.rates), 0)
        robot.wire.send(Hello(role="robot", rates=cfg.rates), 0)
        events = merged_schedule(cfg.duration_s, (
            (PH_OP_CONTROL, cfg.rates.control_hz),
            (PH_ROBOT_CONTROL, cfg.rates.control_hz),
            (PH_ROBOT_HAPTIC, cfg.rates.haptic_hz),
            (PH_OP_HAPTIC, cfg.rates.haptic_hz),
            (PH_ROBOT_SCENE, cfg.rates.scene_hz),
        ))
        end_us = 0
        tick = 0
        for t_us, phase in events:
            if phase == PH_OP_CONTROL:
                tick += 1
                if controller.done(t_us * 1e-6):
                    end_us = t_us
                    break
                operator.control_tick(t_us, tick)
            elif phase == PH_ROBOT_CONTROL:
                robot.control_tick(t_us, tick)
            elif phase == PH_ROBOT_HAPTIC:
                robot.haptic_tick(t_us, tick)
            elif phase == PH_OP_HAPTIC:
                operator.haptic_tick(t_us, tick)
            else:
                robot.scene_tick(t_us, tick)
            end_us = t_us
        robot.finish()
        operator.finish()
        robot_report.duration_s = op_report.duration_s = end_us * 1e-6
    finally:
        robot_sock.close()
        op_sock.close()
    if cfg.log_path:
        robot_report.log.save(str(cfg.log_path) + ".robot")
        op_report.log.save(str(cfg.log_path) + ".operator")
    return robot_report, op_report


def run_session(cfg: SessionConfig, policy: OperatorPolicy | None = None):
    """Convenience: build the scene and controller from the config and run
    the loopback session."""
    scene = cfg.build_scene()
    controller = build_controller(policy or OperatorPolicy(),
                                  cfg.scene if isinstance(cfg.scene, str) else "",
                                  scene, seed=cfg.seed)
    return run_loopback(cfg, controller, scene=scene)


# -- standalone wall-clock runners (live use / CLI) -------------------------

class _WallPacer:
    def __init__(self):
        self.t0 = wallclock.monotonic()

    def wait_until(self, t_us: int) -> None:
        remaining = self.t0 + t_us * 1e-6 - wallclock.monotonic()
        if remaining > 0:
            wallclock.sleep(remaining)


def run_robot(cfg: SessionConfig, scene: SimScene | None = None) -> SessionReport:
    """Serve one operator connection and run the robot side for
    cfg.duration_s. With no client inside accept_timeout_s, returns a
    clean idle report with zero published frames."""
    report = SessionReport(role="robot")
    try:
        srv = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        srv.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        srv.bind((cfg.host, cfg.port))
        srv.listen(1)
    except OSError as err:
        raise BindFailure(f"cannot bind {cfg.host}:{cfg.port}: {err}") from err
    srv.settimeout(cfg.accept_timeout_s)
    try:
        conn, _ = srv.accept()
    except socket.timeout:
        report.errors.append("no client connected")
        return report
    finally:
        srv.close()
    robot = RobotRuntime(cfg, Wire(conn, report), scene=scene)
    robot.wire.send(Hello(role="robot", rates=cfg.rates), 0)
    events = merged_schedule(cfg.duration_s, (
        (PH_ROBOT_CONTROL, cfg.rates.control_hz),
        (PH_ROBOT_HAPTIC, cfg.rates.haptic_hz),
        (PH_ROBOT_SCENE, cfg.rates.scene_hz),
    ))
    pacer = _WallPacer() if cfg.clock == "wall" else None
    tick = 0
    try:
        for t_us, phase in events:
            if pacer:
                pacer.wait_until(t_us)
            tick += 1
            if phase == PH_ROBOT_CONTROL:
                robot.control_tick(t_us, tick)
            elif phase == PH_ROBOT_HAPTIC:
                robot.haptic_tick(t_us, tick)
            else:
                robot.scene_tick(t_us, tick)
            report.duration_s = t_us * 1e-6
    except PeerLost as err:
        report.errors.append(f"peer lost: {err}")
    finally:
        robot.finish()
        conn.close()
    if cfg.log_path:
        report.log.save(cfg.log_path)
    return report


def run_operator(cfg: SessionConfig, policy: OperatorPolicy | None = None) -> SessionReport:
    """Connect to a robot endpoint and drive it with a policy under wall
    or free-running clock."""
    report = SessionReport(role="operator")
    try:
        sock = socket.create_connection((cfg.host, cfg.port), timeout=cfg.accept_timeout_s)
        sock.settimeout(None)
    except OSError as err:
        raise ConnectFailure(f"cannot reach {cfg.host}:{cfg.port}: {err}") from err
    scene_model = cfg.build_scene()  # local copy for task parameters only
    controller = build_controller(policy or OperatorPolicy(),
                                  cfg.scene if isinstance(cfg.scene, str) else "",
                                  scene_model, seed=cfg.seed)
    controller.start({"homes": cfg.retarget.homes, "haptics": cfg.haptics,
                      "rates": cfg.rates, "seed": cfg.seed})
    operator = OperatorRuntime(cfg, Wire(sock, report), controller)
    operator.wire.send(Hello(role="operator", rates=cfg.rates), 0)
    events = merged_schedule(cfg.duration_s, (
        (PH_OP_CONTROL, cfg.rates.control_hz),
        (PH_OP_HAPTIC, cfg.rates.haptic_hz),
    ))
    pacer = _WallPacer() if cfg.clock == "wall" else None
    tick = 0
    try:
        for t_us, phase in events:
            if pacer:
                pacer.wait_until(t_us)
            tick += 1
            if phase == PH_OP_CONTROL:
                if controller.done(t_us * 1e-6):
                    break
                operator.control_tick(t_us, tick)
            else:
                operator.haptic_tick(t_us, tick)
            report.duration_s = t_us * 1e-6
    except PeerLost as err:
        report.errors.append(f"peer lost: {err}")
    finally:
        operator.finish()
        sock.close()
    if cfg.log_path:
        report.log.save(cfg.log_path)
    return report


def replay_check(records: list, retarget: RetargetConfig | None = None) -> dict:
    """Offline retargeting fidelity: recompute the wrist-to-end-effector
    pipeline from logged wrist samples and compare against the logged
    targets.

    Returns max position / orientation deviations and the counts checked.
    """
    from .retargeting import OperatorCalibration, apply_to_robot

    cfg = retarget or RetargetConfig()
    calib: dict = {}
    wrists: dict = {}
    max_pos = 0.0
    max_rot = 0.0
    checked = 0
    records = sorted(
        records, key=lambda r: (r.tick, 0 if isinstance(r.message, WristRecord) else 1))
    for rec in records:
        msg = rec.message
        if isinstance(msg, WristRecord):
            p = np.asarray(msg.p_now)
            r = np.asarray(msg.r_gn).reshape(3, 3)
            if msg.side not in calib:
                calib[msg.side] = OperatorCalibration(p_init=p, r_gl=r)
            wrists.setdefault(msg.side, []).append((msg.t_us, p, r))
        elif isinstance(msg, TargetRecord) and msg.side in calib:
            seen = wrists.get(msg.side)
            if not seen:
                continue
            _, p, r = seen[-1]
            rel = relative_pose(calib[msg.side],
                                WristSample(p_now=p, r_gn=r, t_us=msg.t_us))
            target = apply_to_robot(cfg.homes[msg.side], rel, cfg)
            max_pos = max(max_pos, float(np.linalg.norm(
                target.k_now - np.asarray(msg.k_now))))
            max_rot = max(max_rot, float(np.linalg.norm(
                target.q_gn - np.asarray(msg.q_gn).reshape(3, 3))))
            checked += 1
    return {"checked": checked, "max_pos_err_m": max_pos,
            "max_rot_err_fro": max_rot}

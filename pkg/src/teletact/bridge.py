"""Operator-console bridge: binary wire protocol on one side, JSON text
over WebSocket on the other.

The bridge embeds the operator runtime. Console widgets (wrist sliders,
finger sliders, calibrate, feedback-mode toggle) replace the policy as the
source of wrist samples and hand commands; scene snapshots, taxel grids,
and glove torques stream back out at the scene rate. The JSON schema
mirrors the binary layouts field for field; the binary protocol remains
the source of truth.
"""
from __future__ import annotations

import base64
import hashlib
import json
import socket
import struct
import time as wallclock

import numpy as np

from . import protocol
from .geometry import rot_x, rot_y, rot_z
from .policies import Controller
from .protocol import Haptic, Scene
from .retargeting import NUM_FINGERS
from .sessions import (PH_OP_CONTROL, PH_OP_HAPTIC, BindFailure, ConnectFailure,
                       OperatorRuntime, SessionConfig, SessionReport, Wire,
                       _WallPacer, merged_schedule)

_WS_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"


class WsError(ConnectionError):
    pass


def _accept_key(key: str) -> str:
    digest = hashlib.sha1((key + _WS_GUID).encode()).digest()
    return base64.b64encode(digest).decode()


def ws_encode_text(payload: str, mask: bool = False) -> bytes:
    """One WebSocket text frame (FIN set, no extensions)."""
    data = payload.encode("utf-8")
    head = bytearray([0x81])
    mask_bit = 0x80 if mask else 0x00
    n = len(data)
    if n < 126:
        head.append(mask_bit | n)
    elif n < (1 << 16):
        head.append(mask_bit | 126)
        head += struct.pack(">H", n)
    else:
        head.append(mask_bit | 127)
        head += struct.pack(">Q", n)
    if mask:
        key = b"\x12\x34\x56\x78"
        head += key
        data = bytes(b ^ key[i % 4] for i, b in enumerate(data))
    return bytes(head) + data


def ws_parse(buf: bytearray):
    """Parse one frame from buf; returns (opcode, payload) or None and
    consumes the bytes. Unmasks when a mask is present."""
    if len(buf) < 2:
        return None
    opcode = buf[0] & 0x0F
    masked = bool(buf[1] & 0x80)
    length = buf[1] & 0x7F
    offset = 2
    if length == 126:
        if len(buf) < 4:
            return None
        length = struct.unpack_from(">H", buf, 2)[0]
        offset = 4
    elif length == 127:
        if len(buf) < 10:
            return None
        length = struct.unpack_from(">Q", buf, 2)[0]
        offset = 10
    need = offset + (4 if masked else 0) + length
    if len(buf) < need:
        return None
    if masked:
        key = bytes(buf[offset:offset + 4])
        offset += 4
        raw = bytes(b ^ key[i % 4] for i, b in enumerate(buf[offset:offset + length]))
    else:
        raw = bytes(buf[offset:offset + length])
    del buf[:need]
    return opcode, raw


class WsServerConnection:
    """Server side of one WebSocket connection, non-blocking."""

    def __init__(self, sock: socket.socket):
        self.sock = sock
        self.sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        self.buf = bytearray()
        self.handshaken = False
        self.closed = False

    def _drain_socket(self) -> None:
        while True:
            try:
                chunk = self.sock.recv(65536, socket.MSG_DONTWAIT)
            except (BlockingIOError, InterruptedError):
                return
            except OSError:
                self.closed = True
                return
            if not chunk:
                self.closed = True
                return
            self.buf.extend(chunk)

    def poll_texts(self) -> list:
        """Complete the handshake if pending, answer pings, and return any
        received text payloads."""
        self._drain_socket()
        out = []
        if not self.handshaken:
            end = self.buf.find(b"\r\n\r\n")
            if end < 0:
                return out
            head = bytes(self.buf[:end]).decode("latin-1")
            del self.buf[:end + 4]
            key = None
            for line in head.split("\r\n")[1:]:
                name, _, value = line.partition(":")
                if name.strip().lower() == "sec-websocket-key":
                    key = value.strip()
            if key is None:
                self.sock.sendall(b"HTTP/1.1 400 Bad Request\r\n\r\n")
                self.closed = True
                return out
            resp = ("HTTP/1.1 101 Switching Protocols\r\n"
                    "Upgrade: websocket\r\n"
                    "Connection: Upgrade\r\n"
                    f"Sec-WebSocket-Accept: {_accept_key(key)}\r\n\r\n")
            self.sock.sendall(resp.encode("latin-1"))
            self.handshaken = True
        while (frame := ws_parse(self.buf)) is not None:
            opcode, payload = frame
            if opcode == 0x1:
                out.append(payload.decode("utf-8", errors="replace"))
            elif opcode == 0x8:  # close
                try:
                    self.sock.sendall(b"\x88\x00")
                except OSError:
                    pass
                self.closed = True
            elif opcode == 0x9:  # ping -> pong
                self.sock.sendall(b"\x8a" + bytes([len(payload)]) + payload)
        return out

    def send_text(self, payload: str) -> None:
        if self.closed or not self.handshaken:
            return
        try:
            self.sock.sendall(ws_encode_text(payload))
        except OSError:
            self.closed = True


class WsClient:
    """Minimal client for tests and demos (the browser console uses the
    native WebSocket)."""

    def __init__(self, host: str, port: int, timeout: float = 5.0):
        self.sock = socket.create_connection((host, port), timeout=timeout)
        self.sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        key = base64.b64encode(b"teletact-ws-client!!").decode()
        req = (f"GET / HTTP/1.1\r\nHost: {host}:{port}\r\n"
               "Upgrade: websocket\r\nConnection: Upgrade\r\n"
               f"Sec-WebSocket-Key: {key}\r\nSec-WebSocket-Version: 13\r\n\r\n")
        self.sock.sendall(req.encode("latin-1"))
        self.buf = bytearray()
        deadline = wallclock.monotonic() + timeout
        while b"\r\n\r\n" not in self.buf:
            if wallclock.monotonic() > deadline:
                raise WsError("handshake timeout")
            chunk = self.sock.recv(65536)
            if not chunk:
                raise WsError("server closed during handshake")
            self.buf.extend(chunk)
        head, _, rest = bytes(self.buf).partition(b"\r\n\r\n")
        if b"101" not in head.split(b"\r\n", 1)[0]:
            raise WsError(f"handshake rejected: {head[:80]!r}")
        self.buf = bytearray(rest)

    def send_json(self, obj) -> None:
        self.sock.sendall(ws_encode_text(json.dumps(obj), mask=True))

    def recv_json(self, timeout: float = 5.0):
        deadline = wallclock.monotonic() + timeout
        while True:
            frame = ws_parse(self.buf)
            if frame is not None:
                opcode, payload = frame
                if opcode == 0x1:
                    return json.loads(payload)
                continue
            remaining = deadline - wallclock.monotonic()
            if remaining <= 0:
                raise TimeoutError("no console message in time")
            self.sock.settimeout(remaining)
            chunk = self.sock.recv(65536)
            if not chunk:
                raise WsError("server closed")
            self.buf.extend(chunk)

    def close(self) -> None:
        try:
            self.sock.sendall(b"\x88\x80\x00\x00\x00\x00")
        except OSError:
            pass
        self.sock.close()


class WidgetController(Controller):
    """Operator controller fed by console widgets instead of a policy.
    Latest widget values win; the calibrate button re-zeroes the local
    reference frame."""

    sides = ("left", "right")

    def __init__(self):
        super().__init__()
        self.widgets = {
            side: {"pos": np.zeros(3), "rpy": np.zeros(3),
                   "bend": [0.0] * NUM_FINGERS, "split": 0.0}
            for side in self.sides
        }

    def set_wrist(self, side: str, pos, rpy) -> None:
        w = self.widgets[side]
        w["pos"] = np.asarray(pos, dtype=float)
        w["rpy"] = np.asarray(rpy, dtype=float)

    def set_hand(self, side: str, bend, split: float) -> None:
        w = self.widgets[side]
        w["bend"] = [min(1.0, max(0.0, float(b))) for b in bend]
        w["split"] = min(1.0, max(0.0, float(split)))

    def wrist_sample(self, side: str, t: float):
        w = self.widgets[side]
        r, p, y = w["rpy"]
        return w["pos"].copy(), rot_z(y) @ rot_y(p) @ rot_x(r)

    def hand_command(self, side: str, t: float):
        w = self.widgets[side]
        return tuple(w["bend"]), w["split"]


def scene_to_json(msg: Scene) -> dict:
    sides = {}
    for name, view in (("left", msg.left), ("right", msg.right)):
        sides[name] = {
            "bend": list(view.bend), "split": view.split,
            "ee_pos": list(view.ee_pos), "ee_rot": list(view.ee_rot),
            "force": list(view.force), "indent_mm": view.indent_mm,
            "joints": list(view.joints),
        }
    return {
        "type": "scene", "t": msg.t, "seq": msg.seq, "t_us": msg.t_us,
        "sides": sides,
        "pen": None if msg.pen is None else {"theta": msg.pen[0], "omega": msg.pen[1]},
        "deform_total_mm": msg.deform_total_mm,
        "deform_entries": msg.deform_entries,
        "objects": [{"name": n, "kind": k, "stiffness": s}
                    for n, k, s in msg.objects],
    }


def haptic_to_json(msg: Haptic) -> dict:
    return {
        "type": "haptic", "side": msg.side, "seq": msg.frame.seq,
        "t_us": msg.frame.t_us,
        "taxels": [m.reshape(16).tolist() for m in msg.frame.taxels],
    }


class BridgeRuntime:
    """Glue between the operator runtime and console connections."""

    def __init__(self, cfg: SessionConfig, operator: OperatorRuntime | None,
                 controller: WidgetController):
        self.cfg = cfg
        self.operator = operator
        self.controller = controller
        self.clients: list = []
        self.latest_scene = None
        self.latest_haptic = {}
        self.latest_glove = {}
        self.inbound = 0
        self.rejected = 0

    def _on_glove(self, msg) -> None:
        self.latest_glove[msg.side] = msg

    def note_scene(self, msg: Scene) -> None:
        self.latest_scene = msg

    def note_haptic(self, msg: Haptic) -> None:
        self.latest_haptic[msg.side] = msg

    def poll_clients(self) -> None:
        """Apply inbound console messages to the widget state."""
        for client in list(self.clients):
            for text in client.poll_texts():
                self._handle_text(client, text)
            if client.closed:
                self.clients.remove(client)

    def _handle_text(self, client, text: str) -> None:
        try:
            msg = json.loads(text)
            kind = msg["type"]
            if kind == "wrist":
                self.controller.set_wrist(msg.get("side", "right"),
                                          msg["pos"], msg.get("rpy", (0, 0, 0)))
            elif kind == "hand":
                self.controller.set_hand(msg.get("side", "right"),
                                         msg["bend"], msg.get("split", 0.0))
            elif kind == "calibrate":
                sides = ([msg["side"]] if "side" in msg
                         else list(self.controller.sides))
                for side in sides:
                    self.operator.calib.pop(side, None)
            elif kind == "feedback_mode":
                mode = msg["mode"]
                if mode not in ("visual_only", "visual_plus_haptic"):
                    raise ValueError(f"bad mode {mode!r}")
                self.cfg = replace_feedback(self.cfg, mode)
                self.operator.cfg = self.cfg
            elif kind == "ping":
                client.send_text(json.dumps({"type": "pong",
                                             "echo": msg.get("echo")}))
            else:
                raise ValueError(f"unknown message type {kind!r}")
            self.inbound += 1
        except (KeyError, ValueError, TypeError) as err:
            self.rejected += 1
            client.send_text(json.dumps({"type": "error", "message": str(err)}))

    def push_updates(self) -> None:
        """Forward the latest world state to every console client; called
        at most at the scene rate."""
        if not self.clients:
            return
        payloads = []
        if self.latest_scene is not None:
            payloads.append(json.dumps(scene_to_json(self.latest_scene)))
        for side in sorted(self.latest_haptic):
            payloads.append(json.dumps(haptic_to_json(self.latest_haptic[side])))
        if self.cfg.feedback_mode == "visual_only":
            # No glove commands exist in this mode; the display still has
            # to show the motors at rest.
            for side in ("left", "right"):
                payloads.append(json.dumps({
                    "type": "glove", "side": side, "seq": 0, "t_us": 0,
                    "tau": [0.0] * NUM_FINGERS,
                    "feedback_mode": "visual_only"}))
        else:
            for side in sorted(self.latest_glove):
                g = self.latest_glove[side]
                payloads.append(json.dumps({
                    "type": "glove", "side": g.side, "seq": g.seq,
                    "t_us": g.t_us, "tau": list(g.tau),
                    "feedback_mode": self.cfg.feedback_mode}))
        for client in self.clients:
            for p in payloads:
                client.send_text(p)


def replace_feedback(cfg: SessionConfig, mode: str) -> SessionConfig:
    from dataclasses import replace
    return replace(cfg, feedback_mode=mode)


class BridgeOperator(OperatorRuntime):
    """Operator runtime that also taps drained messages for the console."""

    def __init__(self, cfg, wire, controller, bridge: BridgeRuntime):
        super().__init__(cfg, wire, controller)
        self.bridge = bridge

    def _dispatch(self, t_us: int, tick: int) -> None:
        for msg in self.wire.drain(tick):
            if isinstance(msg, Haptic):
                self.haptic_box[msg.side].put(msg)
                self.last_haptic_rx_us[msg.side] = t_us
                self.bridge.note_haptic(msg)
            elif isinstance(msg, Scene):
                self.scene_box.put(msg)
                self.bridge.note_scene(msg)


def run_bridge(cfg: SessionConfig, stop=None, ready=None) -> SessionReport:
    """Connect to the robot, serve console WebSocket clients, and run the
    operator loop.

    `stop` is polled once per control tick; `ready` (if given) is called
    with the bound console port before the loop starts.
    """
    report = SessionReport(role="bridge")
    try:
        robot_sock = socket.create_connection((cfg.host, cfg.port),
                                              timeout=cfg.accept_timeout_s)
        robot_sock.settimeout(None)
    except OSError as err:
        raise ConnectFailure(f"cannot reach robot {cfg.host}:{cfg.port}: {err}") from err
    try:
        ws_srv = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        ws_srv.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        ws_srv.bind((cfg.bridge_host, cfg.bridge_port))
        ws_srv.listen(4)
        ws_srv.setblocking(False)
    except OSError as err:
        robot_sock.close()
        raise BindFailure(f"cannot bind console endpoint: {err}") from err

    controller = WidgetController()
    controller.start({"homes": cfg.retarget.homes, "haptics": cfg.haptics,
                      "rates": cfg.rates, "seed": cfg.seed})
    bridge = BridgeRuntime(cfg, None, controller)
    operator = BridgeOperator(cfg, Wire(robot_sock, report), controller, bridge)
    bridge.operator = operator
    operator.glove_listener = bridge._on_glove

    if ready is not None:
        ready(ws_srv.getsockname()[1])
    operator.wire.send(protocol.Hello(role="bridge", rates=cfg.rates), 0)
    events = merged_schedule(cfg.duration_s, (
        (PH_OP_CONTROL, cfg.rates.control_hz),
        (PH_OP_HAPTIC, cfg.rates.haptic_hz),
        (5, cfg.rates.scene_hz),  # console push phase
    ))
    pacer = _WallPacer() if cfg.clock == "wall" else None
    tick = 0
    try:
        for t_us, phase in events:
            if pacer:
                pacer.wait_until(t_us)
            tick += 1
            while True:
                try:
                    conn, _ = ws_srv.accept()
                except (BlockingIOError, InterruptedError):
                    break
                bridge.clients.append(WsServerConnection(conn))
            bridge.poll_clients()
            if phase == PH_OP_CONTROL:
                if stop is not None and stop():
                    break
                operator.control_tick(t_us, tick)
            elif phase == PH_OP_HAPTIC:
                operator.haptic_tick(t_us, tick)
            else:
                bridge.push_updates()
            report.duration_s = t_us * 1e-6
    except ConnectionError as err:
        report.errors.append(f"peer lost: {err}")
    finally:
        operator.finish()
        report.task["console_inbound"] = bridge.inbound
        report.task["console_rejected"] = bridge.rejected
        for client in bridge.clients:
            client.sock.close()
        ws_srv.close()
        robot_sock.close()
    if cfg.log_path:
        report.log.save(cfg.log_path)
    return report

"""Bit-exact binary wire protocol and multi-rate scheduling primitives.

Every frame is an 18-byte little-endian header followed by a fixed-layout
payload (floats are IEEE-754 f64, taxel counts are u16). protocol.md at the
repository root states every byte offset. The codec is pure; the mailbox
is the freshness policy (latest value wins, older unread values are
dropped and counted) used by the 500 Hz control and 62 Hz haptic streams.
"""
from __future__ import annotations

import math
import struct
import threading
from dataclasses import dataclass, field

import numpy as np

from .haptics import NUM_FINGERS, HapticFrame
from .retargeting import HandPose, RelativePose

MAGIC = b"\x54\x4c"
VERSION = 1
HEADER = struct.Struct("<2sBBIQH")
HEADER_LEN = HEADER.size  # 18
MAX_PAYLOAD = 0xFFFF

MSG_HELLO = 0x00
MSG_CONTROL = 0x01
MSG_HAPTIC = 0x02
MSG_SCENE = 0x03
MSG_GLOVE = 0x04
# Log-only record types: never cross the network, reuse the same framing
# so session logs stay replayable with one codec.
MSG_WRIST = 0x10
MSG_TARGET = 0x11

SIDES = ("left", "right")
_SIDE_CODE = {"left": 0, "right": 1}
ROLES = ("robot", "operator", "bridge")
_ROLE_CODE = {r: i for i, r in enumerate(ROLES)}
OBJECT_KINDS = ("rigid", "deformable", "pen")
_KIND_CODE = {k: i for i, k in enumerate(OBJECT_KINDS)}

_HELLO = struct.Struct("<B3d")
_CONTROL = struct.Struct("<B18d")
_GLOVE = struct.Struct("<B5d")
_POSE_REC = struct.Struct("<B12d")
_SCENE_SIDE = struct.Struct("<31d")
_SCENE_HEAD = struct.Struct("<d")
_SCENE_PEN = struct.Struct("<B2d")
_SCENE_DEFORM = struct.Struct("<dI")


class ProtocolError(ValueError):
    pass


class BadMagic(ProtocolError):
    pass


class BadVersion(ProtocolError):
    pass


class TruncatedFrame(ProtocolError):
    pass


class UnknownType(ProtocolError):
    pass


class LengthMismatch(ProtocolError):
    pass


class PayloadCorrupt(LengthMismatch):
    """Payload has the declared length but its content violates the
    claimed message type's invariants (corrupted floats, bad codes)."""


class PayloadTooLarge(ProtocolError):
    pass


@dataclass(frozen=True)
class RateSpec:
    """Stream rates in Hz: control commands, haptic feedback, scene snapshots."""

    control_hz: float = 500.0
    haptic_hz: float = 62.0
    scene_hz: float = 30.0

    def __post_init__(self):
        if self.control_hz <= 0 or self.haptic_hz <= 0 or self.scene_hz <= 0:
            raise ValueError("all rates must be positive")


@dataclass
class Hello:
    role: str = "operator"
    rates: RateSpec = field(default_factory=RateSpec)
    seq: int = 0
    t_us: int = 0


@dataclass
class Control:
    side: str
    rel: RelativePose
    hand: HandPose
    seq: int = 0
    t_us: int = 0


@dataclass
class Haptic:
    side: str
    frame: HapticFrame  # frame.seq / frame.t_us ride in the header


@dataclass
class Glove:
    side: str
    tau: tuple  # 5 torques, N*m
    seq: int = 0
    t_us: int = 0


@dataclass
class SceneSide:
    """Per-hand slice of a scene snapshot: achieved hand pose, end-effector
    pose, per-finger contact forces, current indentation, arm joints."""

    bend: tuple = (0.0,) * NUM_FINGERS
    split: float = 0.0
    ee_pos: tuple = (0.0, 0.0, 0.0)
    ee_rot: tuple = tuple(np.eye(3).reshape(9))
    force: tuple = (0.0,) * NUM_FINGERS
    indent_mm: float = 0.0
    joints: tuple = (0.0,) * 7


@dataclass
class Scene:
    """Structured world snapshot: the stand-in for the out-of-scope video
    channel, published at scene_hz for consoles and visual policies."""

    t: float = 0.0
    left: SceneSide = field(default_factory=SceneSide)
    right: SceneSide = field(default_factory=SceneSide)
    pen: tuple | None = None  # (theta_rad, omega_rad_s)
    deform_total_mm: float = 0.0
    deform_entries: int = 0
    objects: tuple = ()  # (name, kind, stiffness) triples
    seq: int = 0
    t_us: int = 0


@dataclass
class WristRecord:
    """Log-only: raw operator wrist sample feeding the retargeting pipeline."""

    side: str
    p_now: tuple
    r_gn: tuple  # 9 row-major entries
    seq: int = 0
    t_us: int = 0


@dataclass
class TargetRecord:
    """Log-only: end-effector target the robot computed from a control."""

    side: str
    k_now: tuple
    q_gn: tuple  # 9 row-major entries
    seq: int = 0
    t_us: int = 0


def _pack_header(msg_type: int, seq: int, t_us: int, payload: bytes) -> bytes:
    if len(payload) > MAX_PAYLOAD:
        raise PayloadTooLarge(f"payload of {len(payload)} bytes exceeds u16 range")
    return HEADER.pack(MAGIC, VERSION, msg_type, seq & 0xFFFFFFFF,
                       t_us & 0xFFFFFFFFFFFFFFFF, len(payload)) + payload


def encode(msg) -> bytes:
    """Serialize a message into one deterministic wire frame."""
    if isinstance(msg, Control):
        payload = _CONTROL.pack(
            _SIDE_CODE[msg.side],
            *msg.rel.p_l.tolist(),
            *msg.rel.r_ln.reshape(9).tolist(),
            *msg.hand.bend,
            msg.hand.thumb_split)
        return _pack_header(MSG_CONTROL, msg.seq, msg.t_us, payload)
    if isinstance(msg, Haptic):
        parts = [bytes([_SIDE_CODE[msg.side]])]
        parts += [np.ascontiguousarray(m, dtype="<u2").tobytes()
                  for m in msg.frame.taxels]
        return _pack_header(MSG_HAPTIC, msg.frame.seq, msg.frame.t_us,
                            b"".join(parts))
    if isinstance(msg, Glove):
        payload = _GLOVE.pack(_SIDE_CODE[msg.side], *msg.tau)
        return _pack_header(MSG_GLOVE, msg.seq, msg.t_us, payload)
    if isinstance(msg, Scene):
        return _pack_header(MSG_SCENE, msg.seq, msg.t_us, _encode_scene(msg))
    if isinstance(msg, Hello):
        payload = _HELLO.pack(_ROLE_CODE[msg.role], msg.rates.control_hz,
                              msg.rates.haptic_hz, msg.rates.scene_hz)
        return _pack_header(MSG_HELLO, msg.seq, msg.t_us, payload)
    if isinstance(msg, WristRecord):
        payload = _POSE_REC.pack(_SIDE_CODE[msg.side], *msg.p_now, *msg.r_gn)
        return _pack_header(MSG_WRIST, msg.seq, msg.t_us, payload)
    if isinstance(msg, TargetRecord):
        payload = _POSE_REC.pack(_SIDE_CODE[msg.side], *msg.k_now, *msg.q_gn)
        return _pack_header(MSG_TARGET, msg.seq, msg.t_us, payload)
    raise TypeError(f"not a wire message: {type(msg)!r}")


def _encode_scene(msg: Scene) -> bytes:
    parts = [_SCENE_HEAD.pack(msg.t)]
    for side in (msg.left, msg.right):
        parts.append(_SCENE_SIDE.pack(
            *side.bend, side.split, *side.ee_pos, *side.ee_rot,
            *side.force, side.indent_mm, *side.joints))
    if msg.pen is None:
        parts.append(_SCENE_PEN.pack(0, 0.0, 0.0))
    else:
        parts.append(_SCENE_PEN.pack(1, msg.pen[0], msg.pen[1]))
    parts.append(_SCENE_DEFORM.pack(msg.deform_total_mm, msg.deform_entries))
    if len(msg.objects) > 0xFF:
        raise PayloadTooLarge("too many scene objects")
    parts.append(bytes([len(msg.objects)]))
    for name, kind, stiffness in msg.objects:
        raw = name.encode("utf-8")
        if len(raw) > 0xFF:
            raise PayloadTooLarge(f"object name too long: {name!r}")
        parts.append(bytes([len(raw)]))
        parts.append(raw)
        parts.append(bytes([_KIND_CODE[kind]]))
        parts.append(struct.pack("<d", stiffness))
    return b"".join(parts)


def _decode_scene(payload: bytes, seq: int, t_us: int) -> Scene:
    off = 0

    def take(fmt_struct):
        nonlocal off
        if off + fmt_struct.size > len(payload):
            raise LengthMismatch("scene payload shorter than its layout")
        vals = fmt_struct.unpack_from(payload, off)
        off += fmt_struct.size
        return vals

    (t,) = take(_SCENE_HEAD)
    sides = []
    for _ in range(2):
        v = take(_SCENE_SIDE)
        sides.append(SceneSide(
            bend=v[0:5], split=v[5], ee_pos=v[6:9], ee_rot=v[9:18],
            force=v[18:23], indent_mm=v[23], joints=v[24:31]))
    pen_present, theta, omega = take(_SCENE_PEN)
    pen = (theta, omega) if pen_present else None
    deform_total, deform_entries = take(_SCENE_DEFORM)
    if off >= len(payload):
        raise LengthMismatch("scene payload missing object table")
    n_objects = payload[off]
    off += 1
    objects = []
    for _ in range(n_objects):
        if off >= len(payload):
            raise LengthMismatch("scene object table truncated")
        name_len = payload[off]
        off += 1
        if off + name_len + 1 + 8 > len(payload):
            raise LengthMismatch("scene object entry truncated")
        name = payload[off:off + name_len].decode("utf-8")
        off += name_len
        kind_code = payload[off]
        off += 1
        if kind_code >= len(OBJECT_KINDS):
            raise LengthMismatch(f"bad object kind code {kind_code}")
        (stiffness,) = struct.unpack_from("<d", payload, off)
        off += 8
        objects.append((name, OBJECT_KINDS[kind_code], stiffness))
    if off != len(payload):
        raise LengthMismatch("scene payload has trailing bytes")
    return Scene(t=t, left=sides[0], right=sides[1], pen=pen,
                 deform_total_mm=deform_total, deform_entries=deform_entries,
                 objects=tuple(objects), seq=seq, t_us=t_us)


def _side_name(code: int) -> str:
    if code >= len(SIDES):
        raise LengthMismatch(f"bad side code {code}")
    return SIDES[code]


def decode(data, offset: int = 0):
    """Parse one frame starting exactly at `offset`.

    Returns (message, next_offset); consumes exactly header + payload_len
    bytes. Raises BadMagic / BadVersion / TruncatedFrame / UnknownType /
    LengthMismatch, each distinguishable.
    """
    view = memoryview(data)
    if offset + HEADER_LEN > len(view):
        raise TruncatedFrame("buffer shorter than frame header")
    magic, version, msg_type, seq, t_us, payload_len = HEADER.unpack_from(view, offset)
    if magic != MAGIC:
        raise BadMagic(f"bad magic {bytes(magic)!r}")
    if version != VERSION:
        raise BadVersion(f"unsupported version {version}")
    start = offset + HEADER_LEN
    end = start + payload_len
    if end > len(view):
        raise TruncatedFrame("buffer ends mid-payload")
    payload = bytes(view[start:end])
    try:
        msg = _decode_payload(msg_type, payload, payload_len, seq, t_us)
    except ProtocolError:
        raise
    except ValueError as err:
        # Right length, wrong content (corrupted floats, bad invariants).
        raise PayloadCorrupt(str(err)) from err
    return msg, end


def _decode_payload(msg_type, payload, payload_len, seq, t_us):
    if msg_type == MSG_CONTROL:
        if payload_len != _CONTROL.size:
            raise LengthMismatch(f"control payload must be {_CONTROL.size} bytes")
        v = _CONTROL.unpack(payload)
        rel = RelativePose(np.array(v[1:4]), np.array(v[4:13]).reshape(3, 3))
        hand = HandPose(bend=v[13:18], thumb_split=v[18])
        msg = Control(side=_side_name(v[0]), rel=rel, hand=hand, seq=seq, t_us=t_us)
    elif msg_type == MSG_HAPTIC:
        if payload_len != 1 + NUM_FINGERS * 32:
            raise LengthMismatch("haptic payload must be 161 bytes")
        taxels = tuple(
            np.frombuffer(payload, dtype="<u2", count=16,
                          offset=1 + 32 * i).reshape(4, 4).copy()
            for i in range(NUM_FINGERS))
        msg = Haptic(side=_side_name(payload[0]),
                     frame=HapticFrame(taxels, t_us=t_us, seq=seq))
    elif msg_type == MSG_GLOVE:
        if payload_len != _GLOVE.size:
            raise LengthMismatch(f"glove payload must be {_GLOVE.size} bytes")
        v = _GLOVE.unpack(payload)
        msg = Glove(side=_side_name(v[0]), tau=v[1:6], seq=seq, t_us=t_us)
    elif msg_type == MSG_SCENE:
        msg = _decode_scene(payload, seq, t_us)
    elif msg_type == MSG_HELLO:
        if payload_len != _HELLO.size:
            raise LengthMismatch(f"hello payload must be {_HELLO.size} bytes")
        v = _HELLO.unpack(payload)
        if v[0] >= len(ROLES):
            raise LengthMismatch(f"bad role code {v[0]}")
        msg = Hello(role=ROLES[v[0]],
                    rates=RateSpec(control_hz=v[1], haptic_hz=v[2], scene_hz=v[3]),
                    seq=seq, t_us=t_us)
    elif msg_type in (MSG_WRIST, MSG_TARGET):
        if payload_len != _POSE_REC.size:
            raise LengthMismatch(f"pose record must be {_POSE_REC.size} bytes")
        v = _POSE_REC.unpack(payload)
        cls = WristRecord if msg_type == MSG_WRIST else TargetRecord
        if msg_type == MSG_WRIST:
            msg = WristRecord(side=_side_name(v[0]), p_now=v[1:4], r_gn=v[4:13],
                              seq=seq, t_us=t_us)
        else:
            msg = TargetRecord(side=_side_name(v[0]), k_now=v[1:4], q_gn=v[4:13],
                               seq=seq, t_us=t_us)
    else:
        raise UnknownType(f"unknown message type 0x{msg_type:02x}")
    return msg


def resync(data, offset: int) -> int:
    """Next candidate frame start at or after `offset` (position of the
    magic bytes), or len(data) when none remains."""
    idx = bytes(data).find(MAGIC, offset)
    return len(data) if idx < 0 else idx


class FrameBuffer:
    """Incremental stream decoder with resync-on-corruption.

    Feed raw socket bytes, pop parsed messages. A frame that fails to
    parse advances the scan to the next magic and bumps `bad_frames`;
    truncated tails simply wait for more data.
    """

    def __init__(self):
        self._buf = bytearray()
        self._offset = 0
        self.bad_frames = 0

    def feed(self, data: bytes) -> None:
        self._buf.extend(data)

    def pop(self):
        """Next decodable message, or None when the buffer is exhausted."""
        got = self.pop_raw()
        return got[0] if got is not None else None

    def pop_raw(self):
        """Like pop, but returns (message, frame_bytes)."""
        while True:
            if self._offset >= len(self._buf):
                self._compact()
                return None
            try:
                start = self._offset
                msg, self._offset = decode(self._buf, self._offset)
                return msg, bytes(self._buf[start:self._offset])
            except TruncatedFrame:
                # A lying length field must not stall the stream forever:
                # if a full max-size frame could fit and still truncates,
                # treat the spot as garbage.
                if len(self._buf) - self._offset > HEADER_LEN + MAX_PAYLOAD:
                    self.bad_frames += 1
                    self._offset = resync(self._buf, self._offset + 1)
                    continue
                self._compact()
                return None
            except ProtocolError:
                self.bad_frames += 1
                self._offset = resync(self._buf, self._offset + 1)

    def _compact(self):
        if self._offset > 4096:
            del self._buf[:self._offset]
            self._offset = 0


def decode_all(data) -> list:
    """Decode every recoverable frame in a closed byte string."""
    fb = FrameBuffer()
    fb.feed(data)
    out = []
    while (msg := fb.pop()) is not None:
        out.append(msg)
    return out


def tick_schedule(rate_hz: float, duration_s: float) -> np.ndarray:
    """Timestamps k/rate for k = 0..floor(duration*rate), inclusive of t=0."""
    if rate_hz <= 0:
        raise ValueError("rate must be positive")
    if duration_s < 0:
        raise ValueError("duration must be non-negative")
    n = int(math.floor(duration_s * rate_hz + 1e-9))
    return np.arange(n + 1) / rate_hz


class LatestWins:
    """Single-slot mailbox: a new put overwrites an unread value (counted
    as a drop); take clears the slot. Safe for many producers and one
    consumer."""

    def __init__(self):
        self._lock = threading.Lock()
        self._value = None
        self._full = False
        self._last = None
        self.drops = 0

    def put(self, msg) -> None:
        with self._lock:
            if self._full:
                self.drops += 1
            self._value = msg
            self._last = msg
            self._full = True

    def take(self):
        """Most recent unread value, or None when empty."""
        with self._lock:
            if not self._full:
                return None
            msg = self._value
            self._value = None
            self._full = False
            return msg

    def peek(self):
        """Most recent value ever put, read or not (None when never filled)."""
        with self._lock:
            return self._last

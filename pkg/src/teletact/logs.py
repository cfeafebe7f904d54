"""Append-only session logs: one record per message, replayable with the
wire codec.

A log is the `TLOG` magic plus a version byte, followed by records of
(direction, tick index, wire frame). Frames are stored exactly as they
appeared on the network, so a log doubles as a protocol conformance
artifact and feeds the offline retargeting-fidelity check.
"""
from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass

from . import protocol

LOG_MAGIC = b"TLOG"
LOG_VERSION = 1
_RECORD_HEAD = struct.Struct("<BQ")

SENT = 0
RECEIVED = 1
LOCAL = 2
DIRECTION_NAMES = ("sent", "received", "local")


@dataclass(frozen=True)
class LogRecord:
    direction: int
    tick: int
    message: object

    @property
    def direction_name(self) -> str:
        return DIRECTION_NAMES[self.direction]


class SessionLog:
    """In-memory append-only record stream with deterministic bytes."""

    def __init__(self):
        self._chunks = [LOG_MAGIC + bytes([LOG_VERSION])]
        self.count = 0

    def append(self, direction: int, tick: int, frame_bytes: bytes) -> None:
        self._chunks.append(_RECORD_HEAD.pack(direction, tick) + frame_bytes)
        self.count += 1

    def append_message(self, direction: int, tick: int, msg) -> None:
        self.append(direction, tick, protocol.encode(msg))

    def to_bytes(self) -> bytes:
        return b"".join(self._chunks)

    def digest(self) -> str:
        return hashlib.sha256(self.to_bytes()).hexdigest()

    def save(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())


def read_log(data: bytes) -> list:
    """Parse a serialized session log into LogRecords."""
    if data[:4] != LOG_MAGIC:
        raise ValueError("not a session log (bad magic)")
    if data[4] != LOG_VERSION:
        raise ValueError(f"unsupported log version {data[4]}")
    records = []
    offset = 5
    while offset < len(data):
        if offset + _RECORD_HEAD.size > len(data):
            raise ValueError("truncated log record header")
        direction, tick = _RECORD_HEAD.unpack_from(data, offset)
        if direction >= len(DIRECTION_NAMES):
            raise ValueError(f"bad log direction {direction}")
        offset += _RECORD_HEAD.size
        msg, offset = protocol.decode(data, offset)
        records.append(LogRecord(direction=direction, tick=tick, message=msg))
    return records


def load_log(path) -> list:
    with open(path, "rb") as fh:
        return read_log(fh.read())

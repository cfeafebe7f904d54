"""The binary wire format, byte by byte.

Encodes a control message and a haptic frame, dumps the header fields,
then corrupts a stream and shows the decoder resynchronizing on the magic
bytes. protocol.md documents every offset shown here.
"""
import numpy as np

from teletact import HandPose, HapticFrame, RelativePose
from teletact.protocol import (Control, Haptic, decode, decode_all, encode,
                               HEADER, HEADER_LEN)
from teletact.simworld import taxelize

msg = Control(side="right",
              rel=RelativePose(np.array([0.05, -0.02, 0.10]), np.eye(3)),
              hand=HandPose(bend=(0.2, 0.4, 0.4, 0.0, 0.0), thumb_split=0.3),
              seq=42, t_us=1_234_567)
frame = encode(msg)
magic, version, msg_type, seq, t_us, payload_len = HEADER.unpack_from(frame)
print(f"control frame: {len(frame)} bytes "
      f"(header {HEADER_LEN} + payload {payload_len})")
print(f"  magic={magic.hex()} version={version} type=0x{msg_type:02x} "
      f"seq={seq} t_us={t_us}")
print("  first 32 bytes:", frame[:32].hex(" "))

haptic = Haptic(side="right",
                frame=HapticFrame((taxelize(1.5, 0),) + tuple(
                    np.zeros((4, 4), np.uint16) for _ in range(4)),
                    seq=7, t_us=2_000_000))
print(f"\nhaptic frame: {len(encode(haptic))} bytes "
      "(161-byte payload: side + 5 x 16 u16 taxels)")

decoded, consumed = decode(frame)
print(f"\ndecode consumed exactly {consumed} bytes; "
      f"side={decoded.side} bend={decoded.hand.bend}")

# Splice garbage between frames: the reader scans to the next magic and
# recovers everything after the corruption.
stream = frame + b"\xde\xad\xbe\xef garbage" + encode(haptic) + frame
messages = decode_all(stream)
print(f"\ncorrupted stream of {len(stream)} bytes ->",
      [type(m).__name__ for m in messages])

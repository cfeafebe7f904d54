"""Launch a live session for the browser console.

Starts the robot and the bridge in this process under the wall clock,
prints the WebSocket endpoint, and serves until Ctrl-C or the duration
elapses. Open frontend/index.html in a browser (see frontend/README.md)
and connect to the printed endpoint to steer the hands, watch the taxel
heatmaps, torque bars, and scene state.

    python demos/10_live_console.py [scene] [duration_s]

Scenes: soft_bottle, hard_bottle, coke_bottle, deformable_bottle, pen,
blind_box, fruit_basket, empty.
"""
import socket
import sys
import threading

from teletact.bridge import run_bridge
from teletact.sessions import SessionConfig, run_robot

scene = sys.argv[1] if len(sys.argv) > 1 else "deformable_bottle"
duration = float(sys.argv[2]) if len(sys.argv) > 2 else 600.0

probe = socket.socket()
probe.bind(("127.0.0.1", 0))
robot_port = probe.getsockname()[1]
probe.close()

robot_cfg = SessionConfig(port=robot_port, duration_s=duration, scene=scene,
                          clock="wall", accept_timeout_s=10.0)
bridge_cfg = SessionConfig(role="bridge", port=robot_port, bridge_port=8765,
                           duration_s=duration, scene=scene, clock="wall",
                           accept_timeout_s=10.0)

robot_thread = threading.Thread(
    target=lambda: run_robot(robot_cfg), daemon=True)
robot_thread.start()

print(f"robot serving scene {scene!r} on 127.0.0.1:{robot_port}")
try:
    report = run_bridge(
        bridge_cfg,
        ready=lambda port: print(
            f"console endpoint ready: ws://127.0.0.1:{port}\n"
            "open frontend/index.html and connect", flush=True))
    print("bridge finished:", report.task)
except KeyboardInterrupt:
    print("stopped")

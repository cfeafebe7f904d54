"""In-hand pen sliding: grip force against gravity.

The pen pivots between the fingertips; loosening the squeeze lets gravity
rotate it, tightening stops it. The task walks it through 35 and 60
degrees to a stop at 85. Direct force feedback lets the operator servo the
slip torque continuously; the visual-only operator must ratchet with
release pulses and a delayed view.
"""
import math

from teletact.policies import PenSlideController
from teletact.sessions import SessionConfig, run_loopback
from teletact.simworld import build_scene

for mode, sensing in (("visual_plus_haptic", "haptic"),
                      ("visual_only", "visual")):
    scene = build_scene("pen", seed=5)
    grip_obj = scene.objects["right"]
    controller = PenSlideController(sensing, scene.pen, grip_obj.stiffness,
                                    grip_obj.contact_bend[0], seed=5)
    cfg = SessionConfig(duration_s=32.0, seed=5, feedback_mode=mode,
                        solve_arm_ik=False)
    robot_report, op_report = run_loopback(cfg, controller, scene=scene)
    task = op_report.task
    theta = math.degrees(robot_report.task.get("pen_theta", 0.0))
    print(f"{mode:20s} success={task['success']} "
          f"time={task['completion_time']:6.2f}s "
          f"final pen angle={theta:6.1f} deg")

print("\nhold force at 60 deg:",
      round(PenSlideController("haptic", build_scene('pen').pen, 50.0)
            .grip_hold(math.radians(60)), 2), "N of squeeze")

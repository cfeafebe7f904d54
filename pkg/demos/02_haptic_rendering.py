"""From taxel counts to glove motor torques.

Each fingertip reports a 4x4 array of counts at 1/3000 N per count. The
aggregate force times the force arm gives the finger torque, saturated at
the glove's 0.5 N*m motor cap.
"""
import numpy as np

from teletact import HapticConfig, HapticFrame, aggregate_force, render_frame
from teletact.simworld import taxelize

cfg = HapticConfig()  # 0.04 m force arm per finger, 0.5 N*m cap

print("force -> taxel grid sum -> torque (clamped)")
for force in (0.0, 0.5, 2.0, 8.0, 20.0):
    grid = taxelize(force, rng=np.random.default_rng(0))
    frame = HapticFrame((grid,) + tuple(np.zeros((4, 4), np.uint16)
                                        for _ in range(4)))
    cmd = render_frame(frame, cfg)
    print(f"  {force:5.1f} N   counts={int(grid.sum()):6d}   "
          f"tau={cmd.tau[0]:.4f} N*m")

strong = taxelize(20.0, rng=np.random.default_rng(1))
print("\na 20 N contact wants", aggregate_force(strong) * cfg.force_arm[0],
      "N*m but the motor saturates at", cfg.torque_max)

# One sample grid, the way the console heatmap sees it:
print("\n2 N contact, center-weighted taxel distribution:")
print(taxelize(2.0, rng=np.random.default_rng(2)))

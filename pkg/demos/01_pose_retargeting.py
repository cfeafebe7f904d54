"""Wrist-to-robot retargeting, step by step.

An operator calibrates once, then every tracker sample is expressed in
that local reference frame and replayed around the robot's pre-positioned
end-effector home. Run this to watch a circular wrist motion land on the
robot side unchanged.
"""
import numpy as np

from teletact import (RetargetConfig, RobotHome, WristSample, apply_to_robot,
                      calibrate, relative_pose)
from teletact.geometry import rot_z

# The operator begins somewhere arbitrary in the tracker's frame.
start = WristSample(p_now=np.array([0.82, -0.11, 1.30]),
                    r_gn=rot_z(0.4))
calib = calibrate(start)
print("calibrated local frame at", np.round(calib.p_init, 3))

home = RobotHome(k_init=np.array([0.45, -0.25, 0.10]), q_gl=np.eye(3))
cfg = RetargetConfig(scale=1.0, homes={"right": home,
                                       "left": RetargetConfig().homes["left"]})

# Sweep the wrist along a 6 cm circle; the robot end-effector traces the
# same circle around its home, because scale is 1.
print("\n   wrist offset (operator)    ->  end-effector (robot)")
for k in range(8):
    angle = 2 * np.pi * k / 8
    offset = 0.06 * np.array([np.cos(angle), np.sin(angle), 0.0])
    sample = WristSample(p_now=start.p_now + calib.r_gl @ offset,
                         r_gn=start.r_gn)
    rel = relative_pose(calib, sample)
    target = apply_to_robot(home, rel, cfg)
    print(f"  {np.round(offset, 3)}  ->  {np.round(target.k_now, 3)}")

# A stationary wrist holds the home pose exactly, no drift.
rel = relative_pose(calib, start)
target = apply_to_robot(home, rel, cfg)
assert np.array_equal(target.k_now, home.k_init)
print("\nstationary wrist holds the home pose exactly:", target.k_now)

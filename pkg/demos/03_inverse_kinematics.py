"""Damped least squares IK on the 7-DoF arm.

Solves a reachable pose from a cold seed, shows the convergence trace,
and demonstrates the bounded behavior at a singular stretched pose.
"""
import numpy as np

from teletact import default_arm, forward_kinematics, solve_ik
from teletact.geometry import Pose, rot_y
from teletact.kinematics import IkParams, NoConvergence, jacobian

arm = default_arm()
print("arm reach:", arm.reach, "m; home:",
      np.round(forward_kinematics(arm, np.zeros(7)).position, 3))

# A comfortable target in front of the torso, tool pitched down 30 deg.
target = Pose(np.array([0.35, 0.20, 0.25]), rot_y(np.radians(30)))
trace = []
q = solve_ik(arm, target, np.zeros(7), trace=trace)
achieved = forward_kinematics(arm, q)
print(f"\nsolved in {len(trace)} iterations")
print("joint angles (rad):", np.round(q, 3))
print("position error:", np.linalg.norm(achieved.position - target.position))

print("\nresidual over iterations:")
for i, (step, residual) in enumerate(trace):
    if i % 3 == 0 or i == len(trace) - 1:
        print(f"  iter {i:3d}  step {step:.2e}  residual {residual:.2e}")

# Fully stretched arm: the Jacobian loses rank, yet damped steps stay
# bounded instead of exploding.
q_singular = np.zeros(7)
sv = np.linalg.svd(jacobian(arm, q_singular), compute_uv=False)
print("\nsingular values at the stretched pose:", np.round(sv, 4))
params = IkParams(max_iters=40)
trace = []
try:
    solve_ik(arm, Pose(np.array([0.1, 0.4, -0.2]), np.eye(3)), q_singular,
             params, trace=trace)
except NoConvergence as err:
    print("budgeted solve stopped early, best residual:",
          f"{err.pos_err:.2e} m")
bound = params.step_scale / params.damping
print("max step / residual ratio:",
      round(max(s / r for s, r in trace if r > 0), 2),
      "(bound", bound, ")")

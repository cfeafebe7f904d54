"""A complete bilateral session over real TCP under the simulated clock.

The operator closes on a soft bottle with haptic feedback; every control,
haptic, scene, and glove message crosses an actual socket. The report at
the end shows the multi-rate stream counts (500 Hz control, 62 Hz haptic,
30 Hz scene) and the deterministic log digest.
"""
import json

from teletact import SessionConfig, run_loopback
from teletact.policies import GraspController

cfg = SessionConfig(duration_s=4.0, scene="soft_bottle", seed=1)
controller = GraspController("haptic", target_force=1.0, seed=1)

robot_report, operator_report = run_loopback(cfg, controller)

print("robot report:")
print(json.dumps(robot_report.summary(), indent=2, sort_keys=True))
print("\noperator result:", operator_report.task)
print("\nrun it twice and the log digests match bit for bit:")
rr2, op2 = run_loopback(cfg, GraspController("haptic", target_force=1.0, seed=1))
print(" ", robot_report.log_digest[:32], "...")
print(" ", rr2.log_digest[:32], "...")
assert rr2.log_digest == robot_report.log_digest

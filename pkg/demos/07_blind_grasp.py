"""Blind grasping: haptic probing versus closing at the nominal center.

The object is hidden inside an open-top box. The probing policy sweeps the
box with a lightly closed hand, centers on the felt contact force, and
closes; the baseline policy just closes at the middle of the box. Ten
paired scenes here (the full experiment runs 200).
"""
from teletact.policies import NominalGraspController, ProbeGraspController
from teletact.sessions import SessionConfig, run_loopback
from teletact.simworld import build_scene

print("seed  hidden object at      probing  baseline")
wins = {"probe": 0, "baseline": 0}
for i in range(10):
    seed = 2024 + i
    results = {}
    for policy_name in ("probe", "baseline"):
        scene = build_scene("blind_box", seed=seed)
        if policy_name == "probe":
            controller = ProbeGraspController(scene.box.bounds, seed=seed)
        else:
            b = scene.box.bounds
            controller = NominalGraspController(((b[0] + b[1]) / 2,
                                                 (b[2] + b[3]) / 2))
        cfg = SessionConfig(duration_s=10.0, seed=seed, solve_arm_ik=False)
        robot_report, _ = run_loopback(cfg, controller, scene=scene)
        ok = robot_report.task.get("grasp_success_right", False)
        results[policy_name] = ok
        wins[policy_name] += ok
    xy = build_scene("blind_box", seed=seed).box.object_xy
    print(f"{seed}  ({xy[0]:.3f}, {xy[1]:.3f})   "
          f"{'grasped' if results['probe'] else 'missed ':8s} "
          f"{'grasped' if results['baseline'] else 'missed'}")

print(f"\nprobing: {wins['probe']}/10, baseline: {wins['baseline']}/10")
print("contact is the only channel that reveals the hidden pose.")

"""Acceptance suite: one test per shipping criterion, each printed as a
single PASS/FAIL line with its runtime. Run with `pytest tests/test_acceptance.py -v -s`.

Everything here runs headless under the simulated clock; the robot-side
streams cross a real TCP loopback connection.
"""
import time

import numpy as np

from teletact.experiments import (exp_blind_grasp, exp_deform_grasp,
                                  exp_stiffness_curves, exp_active_slide,
                                  emit_report)
from teletact.haptics import HapticConfig, HapticFrame, render_frame, aggregate_force
from teletact.kinematics import (IkParams, NoConvergence, default_arm,
                                 forward_kinematics, jacobian, pose_error,
                                 solve_ik)
from teletact.geometry import random_rotation, rotation_angle
from teletact.protocol import ProtocolError, decode, encode
from teletact.retargeting import (RetargetConfig, RobotHome, WristSample,
                                  apply_to_robot, calibrate, relative_pose)
from teletact.sessions import SessionConfig, run_loopback
from tests_protocol_helpers import messages_equal, random_message


class CriterionTimer:
    def __init__(self, name, budget_s):
        self.name = name
        self.budget_s = budget_s

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        dt = time.perf_counter() - self.t0
        status = "PASS" if exc_type is None and dt < self.budget_s else "FAIL"
        print(f"[{status}] {self.name} ({dt:.1f}s / budget {self.budget_s:.0f}s)")
        if exc_type is None:
            assert dt < self.budget_s, (
                f"{self.name} exceeded its runtime budget: {dt:.1f}s")
        return False


def test_force_torque_units_and_clamp():
    with CriterionTimer("taxel force units and 0.5 N*m torque clamp", 1.0):
        full = np.full((4, 4), 3000, dtype=np.uint16)
        assert aggregate_force(full) == 16.0  # exact
        rng = np.random.default_rng(101)
        cfg = HapticConfig()
        for _ in range(10_000):
            taxels = tuple(
                rng.integers(0, 65536, size=(4, 4)).astype(np.uint16)
                for _ in range(5))
            cmd = render_frame(HapticFrame(taxels), cfg)
            assert all(0.0 <= t <= 0.5 for t in cmd.tau)


def test_retargeting_oracle():
    with CriterionTimer("retargeting pipeline vs homogeneous oracle", 1.0):
        rng = np.random.default_rng(102)

        def homogeneous(p, r):
            h = np.eye(4)
            h[:3, :3] = r
            h[:3, 3] = p
            return h

        for _ in range(1000):
            calib = calibrate(WristSample(rng.normal(size=3),
                                          random_rotation(rng)))
            sample = WristSample(rng.normal(size=3), random_rotation(rng))
            home = RobotHome(rng.normal(size=3), random_rotation(rng))
            target = apply_to_robot(home, relative_pose(calib, sample),
                                    RetargetConfig())
            oracle = (homogeneous(home.k_init, home.q_gl)
                      @ np.linalg.inv(homogeneous(calib.p_init, calib.r_gl))
                      @ homogeneous(sample.p_now, sample.r_gn))
            assert np.linalg.norm(target.k_now - oracle[:3, 3]) < 1e-9
            assert np.linalg.norm(target.q_gn - oracle[:3, :3]) < 1e-9
        # Stationary wrist: exact hold of the robot home.
        for _ in range(100):
            s = WristSample(rng.normal(size=3), random_rotation(rng))
            home = RobotHome(rng.normal(size=3), random_rotation(rng))
            target = apply_to_robot(home, relative_pose(calibrate(s), s),
                                    RetargetConfig())
            assert np.array_equal(target.k_now, home.k_init)
            assert np.linalg.norm(target.q_gn - home.q_gl) < 1e-12


def test_kinematics_jacobian_and_round_trip():
    with CriterionTimer("jacobian finite differences and FK/IK round trip", 10.0):
        arm = default_arm()
        rng = np.random.default_rng(103)
        lo = np.array([l for l, _ in arm.limits])
        hi = np.array([h for _, h in arm.limits])

        def fd_jacobian(q, h=1e-6):
            jac = np.zeros((6, 7))
            for i in range(7):
                qp, qm = q.copy(), q.copy()
                qp[i] += h
                qm[i] -= h
                fp = forward_kinematics(arm, qp)
                fm = forward_kinematics(arm, qm)
                jac[:3, i] = (fp.position - fm.position) / (2 * h)
                dr = fp.orientation @ fm.orientation.T
                angle = rotation_angle(dr)
                w = np.zeros(3)
                if angle > 1e-14:
                    w = (angle / (2 * np.sin(angle))) * np.array(
                        [dr[2, 1] - dr[1, 2], dr[0, 2] - dr[2, 0],
                         dr[1, 0] - dr[0, 1]])
                jac[3:, i] = w / (2 * h)
            return jac

        for _ in range(50):
            q = rng.uniform(lo * 0.5, hi * 0.5)
            jac = jacobian(arm, q)
            fd = fd_jacobian(q)
            rel = np.linalg.norm(jac - fd) / max(np.linalg.norm(fd), 1.0)
            assert rel < 1e-5

        params = IkParams(pos_tol=1e-4, rot_tol=1e-3)
        ok = 0
        for _ in range(100):
            q_true = rng.uniform(lo * 0.4, hi * 0.4)
            target = forward_kinematics(arm, q_true)
            q0 = q_true + rng.normal(0, 0.15, size=7)
            try:
                q = solve_ik(arm, target, q0, params)
            except NoConvergence:
                continue
            dp, w = pose_error(forward_kinematics(arm, q), target)
            if np.linalg.norm(dp) <= 1e-4 and np.linalg.norm(w) <= 1e-3:
                ok += 1
        assert ok >= 95


def test_protocol_round_trip_fuzz_and_rates():
    with CriterionTimer("wire codec round trip, fuzz, and loopback rates", 30.0):
        rng = np.random.default_rng(104)
        for _ in range(10_000):
            msg = random_message(rng)
            decoded, _ = decode(encode(msg))
            assert messages_equal(msg, decoded)
        # Truncation at every byte offset of a sample frame.
        sample = encode(random_message(rng))
        for cut in range(len(sample)):
            try:
                decode(sample[:cut])
                assert False, "truncated frame must not decode"
            except ProtocolError:
                pass
        # Random corruption yields only the declared error variants.
        for _ in range(2000):
            data = bytearray(encode(random_message(rng)))
            for _ in range(int(rng.integers(1, 4))):
                data[int(rng.integers(0, len(data)))] = int(rng.integers(0, 256))
            try:
                decode(bytes(data))
            except ProtocolError:
                pass  # every declared variant subclasses ProtocolError
        # 10 s loopback session under the simulated clock.
        from tests_protocol_helpers import StationaryController
        rr, orep = run_loopback(SessionConfig(duration_s=10.0, scene="empty"),
                                StationaryController())
        assert abs(orep.sent["control"] - 5001) <= 1
        assert abs(rr.received["control"] - 5001) <= 1
        assert abs(rr.sent["haptic"] - 621) <= 1
        assert abs(orep.received["haptic"] - 621) <= 1


def test_stiffness_slope_ordering():
    with CriterionTimer("force-bend slope ordering for k=200/800/3000", 10.0):
        res = exp_stiffness_curves(stiffnesses=(200.0, 800.0, 3000.0))
        from tests_protocol_helpers import refit_slopes_from_csv
        slopes = refit_slopes_from_csv(res.to_csv())
        ordered = [slopes[f"object_k{k}"] for k in (200, 800, 3000)]
        assert ordered[0] < ordered[1] < ordered[2]
        assert res.verdicts["slopes_strictly_increasing"]


def test_blind_grasp_rates():
    with CriterionTimer("blind grasping: probing vs no-feedback baseline", 60.0):
        res = exp_blind_grasp(n_trials=200, seed=0)
        rate_h = res.summary["success_rate_haptic"]
        rate_b = res.summary["success_rate_no_feedback"]
        assert rate_h >= 0.4
        assert rate_h >= 4.0 * rate_b
        assert rate_b <= 0.1


def test_active_slide_orderings():
    with CriterionTimer("pen sliding: haptic faster and at least as reliable", 60.0):
        res = exp_active_slide(n_trials=25, seed=0)
        s = res.summary
        assert (s["visual_plus_haptic"]["mean_time_s"]
                < s["visual_only"]["mean_time_s"])
        assert (s["visual_plus_haptic"]["success_rate"]
                >= s["visual_only"]["success_rate"])
        assert s["time_sign_test"]["p"] < 0.05


def test_deformable_grasp_orderings():
    with CriterionTimer("deformable grasping: deformation and timing orderings", 60.0):
        res = exp_deform_grasp(n_trials=25, seed=0)
        assert res.verdicts["haptic_less_deformation_aggressive"]
        assert res.verdicts["haptic_less_deformation_conservative"]
        assert res.verdicts["conservative_slower_visual_plus_haptic"]
        assert res.verdicts["conservative_slower_visual_only"]
        for check in ("deform_sign_test_aggressive",
                      "deform_sign_test_conservative",
                      "time_sign_test_visual_plus_haptic",
                      "time_sign_test_visual_only"):
            assert res.summary[check]["p"] < 0.05


def test_experiment_determinism(tmp_path):
    with CriterionTimer("experiment rerun yields byte-identical CSVs", 60.0):
        paths = []
        for run in ("a", "b"):
            res = exp_stiffness_curves(seed=7)
            paths.append(emit_report([res], tmp_path / run))
        csv_a = open(paths[0]["stiffness_curves"], "rb").read()
        csv_b = open(paths[1]["stiffness_curves"], "rb").read()
        assert csv_a == csv_b
        summaries = [open(p["summary"], "rb").read() for p in paths]
        assert summaries[0] == summaries[1]

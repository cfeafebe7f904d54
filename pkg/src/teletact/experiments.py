"""Experiment harness: grasping stiffness curves, blind grasping,
in-hand pen sliding, and deformable-object grasping, reproduced at desk
scale with scripted operator policies.

Every trial runs end to end through the real wire protocol in loopback;
nothing shortcuts the streams. Human operators are replaced by
parameterized controllers with explicit sensory latency and noise, so all
claims here are orderings between feedback conditions, checked with a
paired-seed sign test, never absolute human numbers. Outputs are CSV plus
a summary JSON with verdicts; fixed seeds give byte-identical files.
"""
from __future__ import annotations

import csv
import io
import json
import os
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import binomtest

from . import logs
from .policies import (BendRamp, GraspController, NominalGraspController,
                       ProbeGraspController, PenSlideController)
from .protocol import Scene
from .sessions import SessionConfig, run_loopback
from .simworld import ConfigError, SimObject, SimScene, build_scene

MODES = ("visual_plus_haptic", "visual_only")
STRATEGIES = ("aggressive", "conservative")


@dataclass
class ExperimentResult:
    name: str
    columns: tuple
    trials: list = field(default_factory=list)  # row dicts matching columns
    summary: dict = field(default_factory=dict)
    verdicts: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.verdicts.values())

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\r\n")
        writer.writerow(self.columns)
        for row in self.trials:
            writer.writerow([_fmt(row[c]) for c in self.columns])
        return buf.getvalue()


def _fmt(value):
    if isinstance(value, bool):
        return int(value)
    if isinstance(value, float):
        return repr(value)
    return value


def sign_test_p(wins: int, losses: int) -> float:
    """One-sided sign test: probability of >= wins successes out of
    wins+losses fair coin flips (ties already removed)."""
    n = wins + losses
    if n == 0:
        return 1.0
    return float(binomtest(wins, n, 0.5, alternative="greater").pvalue)


def paired_sign_test(diffs) -> dict:
    wins = sum(1 for d in diffs if d > 0)
    losses = sum(1 for d in diffs if d < 0)
    return {"wins": wins, "losses": losses, "ties": len(diffs) - wins - losses,
            "p": sign_test_p(wins, losses)}


def _trial_seed(seed: int, index: int) -> int:
    return seed * 1_000_003 + index


def _scene_records(report):
    for rec in logs.read_log(report.log.to_bytes()):
        if rec.direction == logs.SENT and isinstance(rec.message, Scene):
            yield rec.message


# -- stiffness curves --------------------------------------------------------


def fit_slope(bends, forces, min_force: float = 0.05) -> float:
    """Least-squares slope of force against bend over in-contact samples."""
    b = np.asarray(bends)
    f = np.asarray(forces)
    mask = f > min_force
    if mask.sum() < 2:
        return 0.0
    return float(np.polyfit(b[mask], f[mask], 1)[0])


def exp_stiffness_curves(stiffnesses=(200.0, 800.0, 3000.0), seed: int = 0,
                         max_bend: float = 0.85, names=None) -> ExperimentResult:
    """Close the hand slowly on objects of increasing hardness and record
    the per-finger force-versus-bend curves the operator would feel."""
    if names is None:
        names = [f"object_k{int(k)}" for k in stiffnesses]
    if len(names) != len(stiffnesses) or len(set(names)) != len(names):
        raise ConfigError("objects must be distinct")
    result = ExperimentResult(
        name="stiffness_curves",
        columns=("object", "stiffness", "finger", "t", "bend", "force"))
    slopes = {}
    for name, k in zip(names, stiffnesses):
        obj = SimObject(name=name, kind="rigid", stiffness=k)
        scene = SimScene(objects={"right": obj}, seed=seed)
        cfg = SessionConfig(duration_s=5.0, seed=seed)
        controller = BendRamp(max_bend=max_bend, duration=4.0)
        robot_report, _ = run_loopback(cfg, controller, scene=scene)
        samples = {0: ([], []), 1: ([], []), 2: ([], [])}
        for msg in _scene_records(robot_report):
            view = msg.right
            for finger in samples:
                result.trials.append({
                    "object": name, "stiffness": k, "finger": finger,
                    "t": msg.t, "bend": view.bend[finger],
                    "force": view.force[finger]})
                samples[finger][0].append(view.bend[finger])
                samples[finger][1].append(view.force[finger])
        slopes[name] = float(np.mean(
            [fit_slope(b, f) for b, f in samples.values()]))
    ordered = [slopes[n] for n in names]
    strictly_increasing = all(a < b for a, b in zip(ordered, ordered[1:]))
    distinct_k = all(a < b for a, b in zip(stiffnesses, stiffnesses[1:]))
    result.summary = {"slopes": {n: slopes[n] for n in names},
                      "stiffnesses": list(stiffnesses)}
    result.verdicts = {
        "slopes_strictly_increasing": strictly_increasing and distinct_k,
    }
    return result


# -- blind grasping ----------------------------------------------------------


def exp_blind_grasp(n_trials: int = 200, seed: int = 0) -> ExperimentResult:
    """Paired box scenes: haptic probing (sweep, center on the felt force,
    close) versus closing blindly at the nominal box center."""
    if n_trials < 100:
        raise ConfigError("blind grasping needs n_trials >= 100")
    result = ExperimentResult(
        name="blind_grasp",
        columns=("trial", "box_seed", "policy", "success", "time_s"))
    successes = {"haptic_probe": 0, "no_feedback": 0}
    for i in range(n_trials):
        box_seed = _trial_seed(seed, i)
        for policy_name in ("haptic_probe", "no_feedback"):
            scene = build_scene("blind_box", seed=box_seed)
            if policy_name == "haptic_probe":
                controller = ProbeGraspController(scene.box.bounds, seed=box_seed)
                duration = 10.0
            else:
                b = scene.box.bounds
                center = ((b[0] + b[1]) / 2.0, (b[2] + b[3]) / 2.0)
                controller = NominalGraspController(center)
                duration = 3.0
            cfg = SessionConfig(duration_s=duration, seed=box_seed,
                                solve_arm_ik=False)
            robot_report, op_report = run_loopback(cfg, controller, scene=scene)
            success = bool(robot_report.task.get("grasp_success_right", False))
            successes[policy_name] += success
            result.trials.append({
                "trial": i, "box_seed": box_seed, "policy": policy_name,
                "success": success, "time_s": op_report.duration_s})
    rate_haptic = successes["haptic_probe"] / n_trials
    rate_blind = successes["no_feedback"] / n_trials
    result.summary = {
        "n_trials": n_trials,
        "success_rate_haptic": rate_haptic,
        "success_rate_no_feedback": rate_blind,
    }
    result.verdicts = {
        "haptic_rate_at_least_0.4": rate_haptic >= 0.4,
        "haptic_at_least_4x_baseline": rate_haptic >= 4.0 * rate_blind,
        "baseline_at_most_0.1": rate_blind <= 0.1,
    }
    return result


# -- active pen sliding ------------------------------------------------------


def _slide_trial(mode: str, trial_seed: int) -> dict:
    scene = build_scene("pen", seed=trial_seed)
    grip_obj = scene.objects["right"]
    controller = PenSlideController(
        "haptic" if mode == "visual_plus_haptic" else "visual",
        scene.pen, grip_obj.stiffness, grip_obj.contact_bend[0],
        seed=trial_seed)
    cfg = SessionConfig(duration_s=45.0, seed=trial_seed, feedback_mode=mode,
                        solve_arm_ik=False)
    _, op_report = run_loopback(cfg, controller, scene=scene)
    task = op_report.task
    return {"success": bool(task.get("success", False)),
            "time_s": float(task.get("completion_time", cfg.duration_s)),
            "dropped": bool(task.get("dropped", False))}


def exp_active_slide(n_trials: int = 25, mode: str | None = None,
                     seed: int = 0) -> ExperimentResult:
    """Rotate the pen through two intermediate stops to the final angle by
    modulating grip. mode=None runs both feedback conditions on paired
    seeds and compares them."""
    modes = MODES if mode is None else (mode,)
    result = ExperimentResult(
        name="active_slide",
        columns=("trial", "mode", "success", "time_s", "dropped"))
    by_mode = {m: [] for m in modes}
    for i in range(n_trials):
        trial_seed = _trial_seed(seed, i)
        for m in modes:
            rec = _slide_trial(m, trial_seed)
            by_mode[m].append(rec)
            result.trials.append({"trial": i, "mode": m, **rec})
    result.summary = {
        m: {
            "mean_time_s": float(np.mean([r["time_s"] for r in rows])),
            "success_rate": float(np.mean([r["success"] for r in rows])),
        }
        for m, rows in by_mode.items()
    }
    if mode is None:
        h = by_mode["visual_plus_haptic"]
        v = by_mode["visual_only"]
        diffs = [vv["time_s"] - hh["time_s"] for hh, vv in zip(h, v)]
        sign = paired_sign_test(diffs)
        result.summary["time_sign_test"] = sign
        result.verdicts = {
            "haptic_mean_time_below_visual":
                result.summary["visual_plus_haptic"]["mean_time_s"]
                < result.summary["visual_only"]["mean_time_s"],
            "haptic_success_at_least_visual":
                result.summary["visual_plus_haptic"]["success_rate"]
                >= result.summary["visual_only"]["success_rate"],
            "time_sign_test_p_below_0.05": sign["p"] < 0.05,
        }
    return result


# -- deformable grasping -----------------------------------------------------


def _deform_trial(strategy: str, mode: str, trial_seed: int) -> dict:
    scene = build_scene("deformable_bottle", seed=trial_seed)
    controller = GraspController(
        "haptic" if mode == "visual_plus_haptic" else "visual",
        strategy=strategy, seed=trial_seed)
    cfg = SessionConfig(duration_s=25.0, seed=trial_seed, feedback_mode=mode,
                        solve_arm_ik=False)
    robot_report, op_report = run_loopback(cfg, controller, scene=scene)
    return {
        "deformation_mm": float(robot_report.task.get("deform_total_mm", 0.0)),
        "time_s": float(op_report.task.get("completion_time", cfg.duration_s)),
    }


def exp_deform_grasp(strategy: str | None = None, mode: str | None = None,
                     n_trials: int = 25, seed: int = 0) -> ExperimentResult:
    """Grasp the soft bottle under each strategy and feedback condition,
    accumulating indentation depths. strategy/mode=None sweeps all four
    conditions on paired seeds."""
    strategies = STRATEGIES if strategy is None else (strategy,)
    modes = MODES if mode is None else (mode,)
    result = ExperimentResult(
        name="deform_grasp",
        columns=("trial", "strategy", "mode", "deformation_mm", "time_s"))
    rows = {(s, m): [] for s in strategies for m in modes}
    for i in range(n_trials):
        trial_seed = _trial_seed(seed, i)
        for s in strategies:
            for m in modes:
                rec = _deform_trial(s, m, trial_seed)
                rows[(s, m)].append(rec)
                result.trials.append(
                    {"trial": i, "strategy": s, "mode": m, **rec})
    result.summary = {
        f"{s}/{m}": {
            "mean_deformation_mm": float(np.mean([r["deformation_mm"] for r in rr])),
            "mean_time_s": float(np.mean([r["time_s"] for r in rr])),
        }
        for (s, m), rr in rows.items()
    }
    if strategy is None and mode is None:
        verdicts = {}
        for s in STRATEGIES:
            h = rows[(s, "visual_plus_haptic")]
            v = rows[(s, "visual_only")]
            diffs = [vv["deformation_mm"] - hh["deformation_mm"]
                     for hh, vv in zip(h, v)]
            sign = paired_sign_test(diffs)
            result.summary[f"deform_sign_test_{s}"] = sign
            verdicts[f"haptic_less_deformation_{s}"] = (
                np.mean([r["deformation_mm"] for r in h])
                < np.mean([r["deformation_mm"] for r in v])
                and sign["p"] < 0.05)
        for m in MODES:
            a = rows[("aggressive", m)]
            c = rows[("conservative", m)]
            diffs = [cc["time_s"] - aa["time_s"] for aa, cc in zip(a, c)]
            sign = paired_sign_test(diffs)
            result.summary[f"time_sign_test_{m}"] = sign
            verdicts[f"conservative_slower_{m}"] = (
                np.mean([r["time_s"] for r in c])
                > np.mean([r["time_s"] for r in a])
                and sign["p"] < 0.05)
        result.verdicts = verdicts
    return result


# -- reporting ---------------------------------------------------------------


EXPERIMENTS = {
    "stiffness": exp_stiffness_curves,
    "blind": exp_blind_grasp,
    "slide": exp_active_slide,
    "deform": exp_deform_grasp,
}


def emit_report(results, out_dir) -> dict:
    """Write one CSV per experiment plus summary.json with verdicts.
    Deterministic byte content under fixed seeds. Returns the paths."""
    os.makedirs(out_dir, exist_ok=True)
    paths = {}
    summary = {"experiments": {}}
    for res in results:
        csv_path = os.path.join(out_dir, f"{res.name}.csv")
        with open(csv_path, "w", newline="") as fh:
            fh.write(res.to_csv())
        paths[res.name] = csv_path
        summary["experiments"][res.name] = {
            "summary": res.summary,
            "verdicts": res.verdicts,
            "passed": res.passed,
            "n_rows": len(res.trials),
        }
    summary_path = os.path.join(out_dir, "summary.json")
    with open(summary_path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    paths["summary"] = summary_path
    return paths

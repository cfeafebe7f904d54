"""7-DoF serial arm: forward kinematics, geometric Jacobian, and damped
least squares inverse kinematics.

The arm is a plain revolute chain: each joint contributes a fixed link
translation followed by a rotation about a fixed axis, with a tool offset
after the last joint. Joint limits are enforced by per-iteration clamping.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import Pose, axis_angle, rotation_angle

NUM_JOINTS = 7


class Unreachable(ValueError):
    """Target position lies outside the arm's total reach."""


class NoConvergence(RuntimeError):
    """Solver exhausted its iterations; carries the best iterate found."""

    def __init__(self, msg, best_q, pos_err, rot_err):
        super().__init__(msg)
        self.best_q = best_q
        self.pos_err = pos_err
        self.rot_err = rot_err


@dataclass(frozen=True)
class JointSpec:
    """One revolute joint: fixed translation from the previous joint frame,
    then rotation about `axis` by the joint angle."""

    axis: tuple
    offset: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        a = np.asarray(self.axis, dtype=float)
        n = np.linalg.norm(a)
        if n < 1e-12:
            raise ValueError("joint axis must be nonzero")
        object.__setattr__(self, "axis", tuple(a / n))
        object.__setattr__(self, "offset", tuple(float(v) for v in self.offset))


@dataclass(frozen=True)
class ArmModel:
    joints: tuple  # 7 JointSpec rows, base to wrist
    tool_offset: tuple = (0.0, 0.0, 0.0)
    limits: tuple = ((-2.9, 2.9),) * NUM_JOINTS  # radians

    def __post_init__(self):
        if len(self.joints) != NUM_JOINTS:
            raise ValueError(f"arm must have {NUM_JOINTS} joints")
        if len(self.limits) != NUM_JOINTS:
            raise ValueError(f"need {NUM_JOINTS} limit pairs")
        for lo, hi in self.limits:
            if not lo < hi:
                raise ValueError("joint limits must satisfy lo < hi")

    @property
    def reach(self) -> float:
        """Total reach: sum of link offset lengths plus the tool offset."""
        total = sum(np.linalg.norm(j.offset) for j in self.joints)
        return float(total + np.linalg.norm(self.tool_offset))

    def clamp(self, q: np.ndarray) -> np.ndarray:
        lo = np.array([l for l, _ in self.limits])
        hi = np.array([h for _, h in self.limits])
        return np.clip(q, lo, hi)


def default_arm() -> ArmModel:
    """Generic anthropomorphic chain: 3R shoulder, 1R elbow, 3R wrist with
    0.30/0.30/0.10 m links. Zero configuration points the arm along +x."""
    return ArmModel(
        joints=(
            JointSpec(axis=(0, 0, 1)),
            JointSpec(axis=(0, 1, 0)),
            JointSpec(axis=(1, 0, 0)),
            JointSpec(axis=(0, 1, 0), offset=(0.30, 0.0, 0.0)),
            JointSpec(axis=(1, 0, 0), offset=(0.30, 0.0, 0.0)),
            JointSpec(axis=(0, 1, 0)),
            JointSpec(axis=(1, 0, 0)),
        ),
        tool_offset=(0.10, 0.0, 0.0),
        limits=((-2.9, 2.9), (-2.2, 2.2), (-2.9, 2.9), (-2.4, 2.4),
                (-2.9, 2.9), (-2.2, 2.2), (-2.9, 2.9)),
    )


def arm_from_dict(spec: dict) -> ArmModel:
    """Build an ArmModel from the JSON config representation."""
    joints = tuple(
        JointSpec(axis=tuple(row["axis"]), offset=tuple(row.get("offset", (0, 0, 0))))
        for row in spec["joints"]
    )
    return ArmModel(
        joints=joints,
        tool_offset=tuple(spec.get("tool_offset", (0, 0, 0))),
        limits=tuple(tuple(l) for l in spec.get("limits", ((-2.9, 2.9),) * NUM_JOINTS)),
    )


@dataclass(frozen=True)
class IkParams:
    damping: float = 0.05
    max_iters: int = 200
    pos_tol: float = 1e-4   # m
    rot_tol: float = 1e-3   # rad
    step_scale: float = 0.5

    def __post_init__(self):
        if self.damping < 0.0:
            raise ValueError("damping must be >= 0")
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")
        if self.pos_tol <= 0.0 or self.rot_tol <= 0.0:
            raise ValueError("tolerances must be positive")
        if not (0.0 < self.step_scale <= 1.0):
            raise ValueError("step_scale must lie in (0, 1]")


def _chain(model: ArmModel, q):
    """Joint origins/axes in the world frame plus the end-effector pose."""
    r = np.eye(3)
    p = np.zeros(3)
    origins = np.empty((NUM_JOINTS, 3))
    axes = np.empty((NUM_JOINTS, 3))
    for i, joint in enumerate(model.joints):
        p = p + r @ np.asarray(joint.offset)
        origins[i] = p
        axes[i] = r @ np.asarray(joint.axis)
        r = r @ axis_angle(np.asarray(joint.axis), float(q[i]))
    p_ee = p + r @ np.asarray(model.tool_offset)
    return origins, axes, p_ee, r


def forward_kinematics(model: ArmModel, q) -> Pose:
    q = np.asarray(q, dtype=float)
    if q.shape != (NUM_JOINTS,):
        raise ValueError(f"expected {NUM_JOINTS} joint angles")
    if not np.all(np.isfinite(q)):
        raise ValueError("joint angles must be finite")
    _, _, p_ee, r_ee = _chain(model, q)
    return Pose(p_ee, r_ee)


def jacobian(model: ArmModel, q) -> np.ndarray:
    """6x7 geometric Jacobian in the world frame: rows 0..2 linear,
    rows 3..5 angular."""
    q = np.asarray(q, dtype=float)
    origins, axes, p_ee, _ = _chain(model, q)
    jac = np.empty((6, NUM_JOINTS))
    jac[:3] = np.cross(axes, p_ee - origins).T
    jac[3:] = axes.T
    return jac


def pose_error(current: Pose, target: Pose):
    """(linear, angular) twist that carries `current` onto `target`."""
    dp = target.position - current.position
    # Relative rotation in the world frame, as a rotation vector.
    dr = target.orientation @ current.orientation.T
    angle = rotation_angle(dr)
    if angle < 1e-12:
        w = np.zeros(3)
    else:
        w = (angle / (2.0 * np.sin(angle))) * np.array([
            dr[2, 1] - dr[1, 2], dr[0, 2] - dr[2, 0], dr[1, 0] - dr[0, 1]])
    return dp, w


def solve_ik(model: ArmModel, target: Pose, q0, params: IkParams | None = None,
             position_only: bool = False, trace: list | None = None) -> np.ndarray:
    """Damped least squares IK toward a 6-DoF pose target.

    Raises Unreachable when the target position exceeds the arm's total
    reach, and NoConvergence (carrying the best iterate) when max_iters
    runs out with the residual above tolerance. When `trace` is a list it
    receives one (step_norm, residual_norm) pair per iteration.
    """
    if params is None:
        params = IkParams()
    if np.linalg.norm(target.position) > model.reach:
        raise Unreachable(
            f"target at {np.linalg.norm(target.position):.3f} m exceeds "
            f"reach {model.reach:.3f} m")
    q = model.clamp(np.asarray(q0, dtype=float).copy())
    best_q, best_err = q.copy(), np.inf
    best_pos = best_rot = np.inf
    for _ in range(params.max_iters):
        current = forward_kinematics(model, q)
        dp, w = pose_error(current, target)
        pos_err = float(np.linalg.norm(dp))
        rot_err = float(np.linalg.norm(w))
        if position_only:
            rot_err = 0.0
            w = np.zeros(3)
        total = pos_err + rot_err
        if total < best_err:
            best_err, best_q = total, q.copy()
            best_pos, best_rot = pos_err, rot_err
        if pos_err <= params.pos_tol and rot_err <= params.rot_tol:
            return q
        jac = jacobian(model, q)
        e = np.concatenate([dp, w])
        e_norm = float(np.linalg.norm(e))
        # dq = J^T (J J^T + lambda^2 I)^-1 e, bounded near singularities.
        # Damping shrinks with the residual (floored) so the final
        # approach is Newton-like instead of creeping; large residuals,
        # including any singular configuration, keep the full damping.
        lam = params.damping * min(1.0, max(e_norm / 0.05, 0.04))
        scale = (params.step_scale if e_norm > 0.02
                 else min(1.0, 2.0 * params.step_scale))
        jjt = jac @ jac.T + lam * lam * np.eye(6)
        dq = scale * (jac.T @ np.linalg.solve(jjt, e))
        if trace is not None:
            trace.append((float(np.linalg.norm(dq)), e_norm))
        q = model.clamp(q + dq)
    current = forward_kinematics(model, q)
    dp, w = pose_error(current, target)
    pos_err = float(np.linalg.norm(dp))
    rot_err = 0.0 if position_only else float(np.linalg.norm(w))
    if pos_err <= params.pos_tol and rot_err <= params.rot_tol:
        return q
    if pos_err + rot_err < best_err:
        best_q, best_pos, best_rot = q, pos_err, rot_err
    raise NoConvergence(
        f"no convergence after {params.max_iters} iterations "
        f"(pos {best_pos:.2e} m, rot {best_rot:.2e} rad)",
        best_q=best_q, pos_err=best_pos, rot_err=best_rot)


class IkTracker:
    """Warm-started IK for streaming targets: reuses the previous solution
    as the seed and tolerates transient non-convergence by keeping the
    best iterate."""

    def __init__(self, model: ArmModel, q0=None, params: IkParams | None = None):
        self.model = model
        self.q = np.zeros(NUM_JOINTS) if q0 is None else np.asarray(q0, dtype=float)
        self.params = params or IkParams(max_iters=20, pos_tol=1e-4, rot_tol=1e-3)

    def track(self, target: Pose) -> np.ndarray:
        try:
            self.q = solve_ik(self.model, target, self.q, self.params)
        except Unreachable:
            pass  # hold the last feasible solution
        except NoConvergence as err:
            self.q = err.best_q
        return self.q

"""Wrist-motion retargeting and isomorphic hand mapping.

The operator's wrist pose is expressed relative to a calibrated initial
pose (the local reference frame), shipped to the robot side, and replayed
there relative to the robot's pre-positioned end-effector home. Glove
finger readings pass through one-to-one with saturation.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import check_rotation, check_vec3, ensure_rotation

NUM_FINGERS = 5
FINGER_NAMES = ("thumb", "index", "middle", "ring", "little")


@dataclass(frozen=True)
class OperatorCalibration:
    """Initial wrist pose in the operator's global frame; defines the local
    reference frame all subsequent motion is measured against."""

    p_init: np.ndarray
    r_gl: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "p_init", check_vec3(self.p_init))
        object.__setattr__(self, "r_gl", check_rotation(self.r_gl))


@dataclass(frozen=True)
class WristSample:
    """One tracker readout: wrist pose in the operator global frame at t_us."""

    p_now: np.ndarray
    r_gn: np.ndarray
    t_us: int = 0

    def __post_init__(self):
        object.__setattr__(self, "p_now", check_vec3(self.p_now))
        object.__setattr__(self, "r_gn", check_rotation(self.r_gn))


@dataclass(frozen=True)
class RelativePose:
    """Wrist displacement and orientation in the local reference frame.
    This is the control payload that crosses the wire."""

    p_l: np.ndarray
    r_ln: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "p_l", check_vec3(self.p_l))
        object.__setattr__(self, "r_ln", check_rotation(self.r_ln))

    @staticmethod
    def identity() -> "RelativePose":
        return RelativePose(np.zeros(3), np.eye(3))


@dataclass(frozen=True)
class RobotHome:
    """Pre-positioned end-effector pose in the robot torso frame."""

    k_init: np.ndarray
    q_gl: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "k_init", check_vec3(self.k_init))
        object.__setattr__(self, "q_gl", check_rotation(self.q_gl))


@dataclass(frozen=True)
class EndEffectorTarget:
    """Commanded end-effector pose in the robot torso frame."""

    k_now: np.ndarray
    q_gn: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "k_now", check_vec3(self.k_now))
        object.__setattr__(self, "q_gn", check_rotation(self.q_gn))


@dataclass(frozen=True)
class HandPose:
    """Normalized finger bends (thumb..little) plus thumb split, all in [0,1]."""

    bend: tuple = (0.0, 0.0, 0.0, 0.0, 0.0)
    thumb_split: float = 0.0

    def __post_init__(self):
        bend = tuple(float(b) for b in self.bend)
        if len(bend) != NUM_FINGERS:
            raise ValueError(f"expected {NUM_FINGERS} bend values, got {len(bend)}")
        if any(not (0.0 <= b <= 1.0) for b in bend):
            raise ValueError("bend values must lie in [0, 1]")
        split = float(self.thumb_split)
        if not (0.0 <= split <= 1.0):
            raise ValueError("thumb_split must lie in [0, 1]")
        object.__setattr__(self, "bend", bend)
        object.__setattr__(self, "thumb_split", split)


def _default_homes() -> dict:
    return {
        "left": RobotHome(np.array([0.45, 0.25, 0.10]), np.eye(3)),
        "right": RobotHome(np.array([0.45, -0.25, 0.10]), np.eye(3)),
    }


@dataclass(frozen=True)
class RetargetConfig:
    """Workspace scaling plus the per-side robot homes. scale=1 reproduces a
    1:1 operator-to-robot mapping."""

    scale: float = 1.0
    homes: dict = field(default_factory=_default_homes)

    def __post_init__(self):
        if not self.scale > 0.0:
            raise ValueError("scale must be positive")
        for side, home in self.homes.items():
            if side not in ("left", "right"):
                raise ValueError(f"unknown side {side!r}")
            if not isinstance(home, RobotHome):
                raise TypeError("homes values must be RobotHome")


def calibrate(sample: WristSample) -> OperatorCalibration:
    """Freeze the current wrist pose as the local reference frame."""
    return OperatorCalibration(p_init=sample.p_now.copy(), r_gl=sample.r_gn.copy())


def relative_pose(calib: OperatorCalibration, sample: WristSample) -> RelativePose:
    """Express the current wrist pose in the calibrated local frame."""
    r_inv = calib.r_gl.T
    p_l = r_inv @ (sample.p_now - calib.p_init)
    # Single product gives all three local axis columns at once.
    r_ln = ensure_rotation(r_inv @ sample.r_gn)
    return RelativePose(p_l=p_l, r_ln=r_ln)


def apply_to_robot(home: RobotHome, rel: RelativePose,
                   cfg: RetargetConfig | None = None) -> EndEffectorTarget:
    """Replay a local-frame wrist motion about the robot's home pose."""
    scale = 1.0 if cfg is None else cfg.scale
    k_now = home.q_gl @ (scale * rel.p_l) + home.k_init
    q_gn = ensure_rotation(home.q_gl @ rel.r_ln)
    return EndEffectorTarget(k_now=k_now, q_gn=q_gn)


def map_hand(glove_bend, glove_split: float) -> HandPose:
    """Isomorphic glove-to-hand mapping: identity with saturation into [0,1]."""
    bend = tuple(min(1.0, max(0.0, float(b))) for b in glove_bend)
    if len(bend) != NUM_FINGERS:
        raise ValueError(f"expected {NUM_FINGERS} bend values, got {len(bend)}")
    split = min(1.0, max(0.0, float(glove_split)))
    return HandPose(bend=bend, thumb_split=split)

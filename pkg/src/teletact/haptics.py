"""Fingertip taxel aggregation and glove torque rendering.

Each fingertip carries a 4x4 taxel array whose counts are quantized at
1/3000 N. The aggregate contact force is the plain sum of the array; the
rendered finger torque is force times the force arm, saturated at the
glove motor's torque cap.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .retargeting import NUM_FINGERS

TAXEL_ROWS = 4
TAXEL_COLS = 4
COUNTS_PER_NEWTON = 3000
# Per-count u16 wire representation bounds the readable range.
TAXEL_MAX_COUNT = 0xFFFF

# Glove motor saturation torque, N*m.
DEFAULT_TORQUE_MAX = 0.5
# Fingertip-to-proximal-phalanx distance, meters. Declared assumption: a
# plausible anatomical default, configurable per finger.
DEFAULT_FORCE_ARM = 0.04


class NonPositiveArm(ValueError):
    """Force arm must be strictly positive."""


class TaxelOverflow(OverflowError):
    """A taxel count exceeded the u16 wire range."""


def zero_taxels() -> np.ndarray:
    return np.zeros((TAXEL_ROWS, TAXEL_COLS), dtype=np.uint16)


def check_taxels(m) -> np.ndarray:
    m = np.asarray(m)
    if m.shape != (TAXEL_ROWS, TAXEL_COLS):
        raise ValueError(f"taxel matrix must be 4x4, got shape {m.shape}")
    if m.dtype == np.uint16:
        return m  # already in wire form; u16 cannot violate the bounds
    if np.any(m < 0):
        raise ValueError("taxel counts must be non-negative")
    if np.any(m > TAXEL_MAX_COUNT):
        raise TaxelOverflow("taxel count exceeds u16 range")
    return m.astype(np.uint16)


@dataclass(frozen=True)
class HapticFrame:
    """One robot-to-operator feedback sample: five taxel matrices keyed by
    finger index (thumb..little), a timestamp, and a stream sequence."""

    taxels: tuple  # 5 taxel matrices, thumb..little
    t_us: int = 0
    seq: int = 0

    def __post_init__(self):
        if len(self.taxels) != NUM_FINGERS:
            raise ValueError(f"frame must carry {NUM_FINGERS} fingers")
        object.__setattr__(self, "taxels",
                           tuple(check_taxels(m) for m in self.taxels))

    @staticmethod
    def zero(t_us: int = 0, seq: int = 0) -> "HapticFrame":
        return HapticFrame(tuple(zero_taxels() for _ in range(NUM_FINGERS)),
                           t_us=t_us, seq=seq)


@dataclass(frozen=True)
class HapticConfig:
    """Per-finger force arm (m) and the glove torque cap (N*m)."""

    force_arm: tuple = (DEFAULT_FORCE_ARM,) * NUM_FINGERS
    torque_max: float = DEFAULT_TORQUE_MAX

    def __post_init__(self):
        arms = tuple(float(a) for a in self.force_arm)
        if len(arms) != NUM_FINGERS:
            raise ValueError(f"need {NUM_FINGERS} force arms")
        if any(a <= 0.0 for a in arms):
            raise NonPositiveArm("force arms must be positive")
        if not self.torque_max > 0.0:
            raise ValueError("torque_max must be positive")
        object.__setattr__(self, "force_arm", arms)


@dataclass(frozen=True)
class GloveCommand:
    """Torque setpoints per finger motor, N*m, already saturated."""

    tau: tuple = (0.0,) * NUM_FINGERS

    def __post_init__(self):
        tau = tuple(float(t) for t in self.tau)
        if len(tau) != NUM_FINGERS:
            raise ValueError(f"need {NUM_FINGERS} torques")
        if any(t < 0.0 for t in tau):
            raise ValueError("torques must be non-negative")
        object.__setattr__(self, "tau", tau)

    @staticmethod
    def zero() -> "GloveCommand":
        return GloveCommand()


def aggregate_force(taxels) -> float:
    """Total fingertip force in newtons: sum of all counts over 3000."""
    m = check_taxels(taxels)
    return float(int(m.sum(dtype=np.int64))) / COUNTS_PER_NEWTON


def compute_torque(force: float, arm: float) -> float:
    """Raw (pre-clamp) finger torque from contact force and force arm."""
    if arm <= 0.0:
        raise NonPositiveArm(f"force arm must be positive, got {arm}")
    if force < 0.0:
        raise ValueError("force must be non-negative")
    return force * arm

def render_frame(frame: HapticFrame, cfg: HapticConfig | None = None) -> GloveCommand:
    """Render a haptic frame into saturated per-finger glove torques."""
    if cfg is None:
        cfg = HapticConfig()
    tau = tuple(
        min(compute_torque(aggregate_force(frame.taxels[i]), cfg.force_arm[i]),
            cfg.torque_max)
        for i in range(NUM_FINGERS)
    )
    return GloveCommand(tau=tau)

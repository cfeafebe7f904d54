"""Deterministic robot-side world.

A five-finger hand per side closes on parameterized objects; fingertip
contact is a per-finger linear spring indexed by normalized bend, which
reproduces exactly the force-versus-bend observable the experiments need
without a collision engine. Aggregate forces are spread over the 4x4 taxel
arrays by a center-weighted kernel with seeded, sum-preserving noise. The
pen is a pivoted rod with Coulomb friction at the fingertip contact. All
randomness is seeded; stepping a scene with the same control sequence is
bit-reproducible.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .geometry import Pose
from .haptics import COUNTS_PER_NEWTON, TAXEL_MAX_COUNT, HapticFrame, TaxelOverflow
from .retargeting import (NUM_FINGERS, EndEffectorTarget, HandPose,
                          RelativePose, RetargetConfig, apply_to_robot)

GRAVITY = 9.81
# Finger motor dynamics proxy: max closing speed, normalized units/s.
DEFAULT_SLEW_RATE = 2.0
CONTROL_DT = 0.002  # 500 Hz

THUMB = 0


class NegativeDepth(ValueError):
    """Indentation depths cannot be negative."""


class ConfigError(ValueError):
    """Scene or experiment configuration is unusable."""


@dataclass(frozen=True)
class SimObject:
    """A graspable object: linear contact stiffness, per-finger first-touch
    bend, and (for deformables) the fraction of peak indentation that
    persists after release."""

    name: str
    kind: str = "rigid"  # rigid | deformable | pen
    stiffness: float = 800.0  # N per unit normalized bend
    contact_bend: tuple = (0.30, 0.30, 0.32, 1.0, 1.0)
    pose: Pose = field(default_factory=Pose.identity)
    plasticity: float = 0.0  # deformable only, in [0, 1]
    indent_mm_per_unit: float = 25.0  # mm of material depth per unit bend
    mass: float = 0.1  # kg, used by the simulated lift test
    friction: float = 0.6
    width: float = 0.06  # graspable width, m
    # Finger motors stall once the indentation reaches this depth, as a
    # real finger stalls against the object surface.
    max_indent: float = 0.05

    def __post_init__(self):
        if self.kind not in ("rigid", "deformable", "pen"):
            raise ConfigError(f"unknown object kind {self.kind!r}")
        if not self.stiffness > 0.0:
            raise ConfigError("stiffness must be positive")
        if not self.max_indent > 0.0:
            raise ConfigError("max_indent must be positive")
        if len(self.contact_bend) != NUM_FINGERS:
            raise ConfigError(f"need {NUM_FINGERS} contact_bend entries")
        if any(not (0.0 <= c <= 1.0) for c in self.contact_bend):
            raise ConfigError("contact_bend must lie in [0, 1]")
        if not (0.0 <= self.plasticity <= 1.0):
            raise ConfigError("plasticity must lie in [0, 1]")


@dataclass(frozen=True)
class PenState:
    """Pivoted-rod pen: angle from vertical, angular rate, and the contact
    parameters that couple grip force to friction torque."""

    theta: float = 0.0  # rad from vertical
    omega: float = 0.0  # rad/s
    mass: float = 0.02  # kg
    com_dist: float = 0.06  # m, pivot to center of mass
    inertia: float = 1.05e-4  # kg m^2 about the pivot
    contact_radius: float = 0.005  # m
    mu: float = 0.5

    def __post_init__(self):
        for name in ("mass", "com_dist", "inertia", "contact_radius", "mu"):
            if not getattr(self, name) > 0.0:
                raise ConfigError(f"{name} must be positive")


@dataclass(frozen=True)
class DeformationLedger:
    """Append-only record of indentation depths (mm) with a running total."""

    entries: tuple = ()

    @property
    def total(self) -> float:
        return float(sum(self.entries))


def record_indentation(ledger: DeformationLedger, depth_mm: float) -> DeformationLedger:
    if depth_mm < 0.0:
        raise NegativeDepth(f"indentation depth must be >= 0, got {depth_mm}")
    return DeformationLedger(entries=ledger.entries + (float(depth_mm),))


@dataclass(frozen=True)
class BoxScene:
    """Open-top box with a hidden object somewhere inside. The object pose
    is never exposed to operator policies; only contact can find it."""

    bounds: tuple  # (x_min, x_max, y_min, y_max), robot torso frame, m
    object_xy: tuple  # hidden
    object_width: float = 0.06
    probe_z: float = 0.10

    def __post_init__(self):
        x0, x1, y0, y1 = self.bounds
        x, y = self.object_xy
        if not (x0 <= x <= x1 and y0 <= y <= y1):
            raise ConfigError("hidden object must lie inside the box bounds")


def sample_box_scene(seed: int, center=(0.45, -0.25), size: float = 0.16,
                     object_width: float = 0.06) -> BoxScene:
    """Uniformly place the hidden object inside the box interior margins.
    Deterministic per seed."""
    rng = np.random.default_rng(seed)
    half = size / 2.0
    margin = object_width / 2.0
    x = center[0] + rng.uniform(-half + margin, half - margin)
    y = center[1] + rng.uniform(-half + margin, half - margin)
    bounds = (center[0] - half, center[0] + half, center[1] - half, center[1] + half)
    return BoxScene(bounds=bounds, object_xy=(float(x), float(y)),
                    object_width=object_width)


def contact_force(obj: SimObject, finger: int, bend: float,
                  extra_bend_offset: float = 0.0, factor: float = 1.0) -> float:
    """Linear-spring contact: F = k * max(0, bend - first-touch bend).

    `extra_bend_offset` carries accumulated plastic set for deformables;
    `factor` scales for off-center contact in the box scene.
    """
    threshold = obj.contact_bend[finger] + extra_bend_offset
    indent = bend - threshold
    if indent <= 0.0:
        return 0.0
    return obj.stiffness * indent * factor


# Center-weighted distribution kernel over the 4x4 array.
_KERNEL = np.array([[1, 2, 2, 1], [2, 4, 4, 2], [2, 4, 4, 2], [1, 2, 2, 1]],
                   dtype=float)
_KERNEL /= _KERNEL.sum()
_KERNEL_FLAT = _KERNEL.reshape(16)
# Fixed disjoint cell pairing for sum-preserving noise: each taxel sits in
# exactly one pair, so noise moves at most 2 counts per taxel.
_NOISE_PAIRS = tuple((i, 15 - i) for i in range(8))
_ZERO_TAXELS = np.zeros((4, 4), dtype=np.uint16)
_ZERO_TAXELS.setflags(write=False)


def taxelize(force: float, rng: np.random.Generator | int | None = None) -> np.ndarray:
    """Distribute an aggregate force over 16 taxel counts.

    The sum of counts equals round(force * 3000), so the Eq.-style
    aggregate recovers the force within one quantization count. Noise is
    seeded and moves counts between disjoint cell pairs, at most 2 per
    taxel, leaving the sum intact.
    """
    if force < 0.0:
        raise ValueError("force must be non-negative")
    total = int(round(force * COUNTS_PER_NEWTON))
    if total == 0:
        return _ZERO_TAXELS
    if total > 16 * TAXEL_MAX_COUNT:
        raise TaxelOverflow(f"force {force} N exceeds the array range")
    base = _KERNEL_FLAT * total
    counts = np.floor(base).astype(np.int64)
    remainder = total - int(counts.sum())
    if remainder:
        order = np.argsort(-(base - counts), kind="stable")
        counts[order[:remainder]] += 1
    if rng is not None:
        if not isinstance(rng, np.random.Generator):
            rng = np.random.default_rng(rng)
        deltas = rng.integers(-2, 3, size=len(_NOISE_PAIRS))
        for (a, b), d in zip(_NOISE_PAIRS, deltas):
            if d > 0:
                t = min(d, counts[a])
                counts[a] -= t
                counts[b] += t
            elif d < 0:
                t = min(-d, counts[b])
                counts[b] -= t
                counts[a] += t
    if counts.max() > TAXEL_MAX_COUNT:
        raise TaxelOverflow("a taxel count exceeds the u16 range")
    return counts.astype(np.uint16).reshape(4, 4)


def pen_step(state: PenState, grip_force: float, dt: float) -> PenState:
    """Advance the pen by one torque-balance step (semi-implicit Euler).

    Gravity torque m*g*d*sin(theta) fights the Coulomb friction capacity
    mu*grip*r. A resting pen stays held while the capacity covers gravity;
    a moving pen is braked by friction and clamps to rest instead of
    reversing.
    """
    if not (0.0 < dt <= 0.01):
        raise ValueError("dt must lie in (0, 0.01]")
    if grip_force < 0.0:
        raise ValueError("grip force must be non-negative")
    tau_g = state.mass * GRAVITY * state.com_dist * math.sin(state.theta)
    tau_f = state.mu * grip_force * state.contact_radius
    omega = state.omega
    if omega == 0.0:
        if abs(tau_g) <= tau_f:
            return state  # held
        direction = 1.0 if tau_g > 0.0 else -1.0
    else:
        direction = 1.0 if omega > 0.0 else -1.0
    alpha = (tau_g - direction * tau_f) / state.inertia
    new_omega = omega + alpha * dt
    # Friction may decelerate through zero within a step; it cannot drive
    # the pen backwards.
    if omega != 0.0 and new_omega * omega < 0.0 and abs(tau_g) <= tau_f:
        new_omega = 0.0
    new_theta = state.theta + new_omega * dt
    return replace(state, theta=new_theta, omega=new_omega)


class SideState:
    """Mutable per-hand state: commanded and achieved hand pose, the
    end-effector target, and per-finger contact bookkeeping."""

    def __init__(self, home_target: EndEffectorTarget):
        self.commanded = HandPose()
        self.bend = [0.0] * NUM_FINGERS
        self.split = 0.0
        self.target = home_target
        self.forces = [0.0] * NUM_FINGERS
        self.plastic_offset = [0.0] * NUM_FINGERS
        self.peak_indent = [0.0] * NUM_FINGERS
        self.in_contact = [False] * NUM_FINGERS
        self.indent_mm = 0.0


class SimScene:
    """One robot-side world instance, stepped at the control rate."""

    def __init__(self, retarget: RetargetConfig | None = None,
                 objects: dict | None = None, pen: PenState | None = None,
                 pen_side: str = "right", box: BoxScene | None = None,
                 seed: int = 0, slew_rate: float = DEFAULT_SLEW_RATE,
                 touch_radius: float = 0.025, capture_radius: float = 0.013,
                 initial_hand: dict | None = None):
        self.retarget = retarget or RetargetConfig()
        # side -> target SimObject (one graspable object per hand)
        self.objects: dict = dict(objects or {})
        self.pen = pen
        self.pen_side = pen_side
        self.box = box
        self.ledger = DeformationLedger()
        self.slew_rate = slew_rate
        self.touch_radius = touch_radius
        self.capture_radius = capture_radius
        self.time = 0.0
        self.frame_seq = 0
        self.rng = np.random.default_rng(seed)
        self.sides = {
            side: SideState(apply_to_robot(self.retarget.homes[side],
                                           RelativePose.identity(),
                                           self.retarget))
            for side in ("left", "right")
        }
        # Scenes like the pen task begin mid-grasp: the hand starts closed
        # on the object rather than open.
        for side, hand in (initial_hand or {}).items():
            state = self.sides[side]
            state.commanded = hand
            state.bend = list(hand.bend)
            state.split = hand.thumb_split
            self._update_contacts(side, state)

    # -- contact geometry -------------------------------------------------

    def _proximity(self, side: str) -> tuple:
        """(force factor, centered flag) for the side's target object."""
        if self.box is None or side != "right":
            return 1.0, True
        ee = self.sides[side].target.k_now
        dx = ee[0] - self.box.object_xy[0]
        dy = ee[1] - self.box.object_xy[1]
        offset = math.hypot(dx, dy)
        if offset >= self.touch_radius:
            return 0.0, False
        return 1.0 - offset / self.touch_radius, offset <= self.capture_radius

    # -- stepping ----------------------------------------------------------

    def step(self, controls: dict, dt: float = CONTROL_DT,
             want_frames: bool = True) -> dict:
        """Advance one control period.

        `controls` maps side -> (RelativePose, HandPose); missing sides
        hold their last command. Returns {side: HapticFrame} when
        `want_frames`, else {} (frames can be produced on demand with
        `make_frame`).
        """
        self.time += dt
        max_step = self.slew_rate * dt
        for side, state in self.sides.items():
            ctrl = controls.get(side)
            if ctrl is not None:
                rel, hand = ctrl
                state.target = apply_to_robot(self.retarget.homes[side], rel,
                                              self.retarget)
                state.commanded = hand
            # Bounded-rate slew stands in for finger motor dynamics.
            for i in range(NUM_FINGERS):
                delta = state.commanded.bend[i] - state.bend[i]
                if delta > max_step:
                    delta = max_step
                elif delta < -max_step:
                    delta = -max_step
                state.bend[i] += delta
            delta = state.commanded.thumb_split - state.split
            state.split += max(-max_step, min(max_step, delta))
            self._update_contacts(side, state)
        if self.pen is not None:
            grip = self.grip_force(self.pen_side)
            self.pen = pen_step(self.pen, grip, dt)
        if not want_frames:
            return {}
        return {side: self.make_frame(side) for side in self.sides}

    def _update_contacts(self, side: str, state: SideState) -> None:
        obj = self.objects.get(side)
        if obj is None:
            if any(f != 0.0 for f in state.forces):
                state.forces = [0.0] * NUM_FINGERS
            state.indent_mm = 0.0
            return
        factor, _ = self._proximity(side)
        max_indent_mm = 0.0
        for i in range(NUM_FINGERS):
            threshold = obj.contact_bend[i] + state.plastic_offset[i]
            if factor > 0.0 and state.bend[i] > threshold + obj.max_indent:
                state.bend[i] = threshold + obj.max_indent  # motor stall
            indent = state.bend[i] - threshold
            if indent > 0.0 and factor > 0.0:
                state.forces[i] = obj.stiffness * indent * factor
                state.in_contact[i] = True
                if indent > state.peak_indent[i]:
                    state.peak_indent[i] = indent
                mm = indent * obj.indent_mm_per_unit
                if mm > max_indent_mm:
                    max_indent_mm = mm
            else:
                state.forces[i] = 0.0
                if state.in_contact[i]:
                    self._release_finger(obj, state, i)
        state.indent_mm = max_indent_mm if obj.kind == "deformable" else 0.0

    def _release_finger(self, obj: SimObject, state: SideState, i: int) -> None:
        state.in_contact[i] = False
        peak = state.peak_indent[i]
        state.peak_indent[i] = 0.0
        if obj.kind == "deformable" and peak > 0.0:
            state.plastic_offset[i] += obj.plasticity * peak
            self.ledger = record_indentation(self.ledger,
                                             peak * obj.indent_mm_per_unit)

    def finalize_deformation(self) -> None:
        """Record still-in-contact peaks; call at the end of an episode."""
        for side, state in self.sides.items():
            obj = self.objects.get(side)
            if obj is None:
                continue
            for i in range(NUM_FINGERS):
                if state.in_contact[i]:
                    self._release_finger(obj, state, i)

    # -- readouts ----------------------------------------------------------

    def grip_force(self, side: str) -> float:
        """Net normal squeeze on the held object: twice the weaker of the
        opposing contact groups (thumb versus the other fingers)."""
        f = self.sides[side].forces
        others = f[1] + f[2] + f[3] + f[4]
        return 2.0 * min(f[THUMB], others)

    def make_frame(self, side: str, seq: int | None = None,
                   t_us: int | None = None) -> HapticFrame:
        """Assemble a haptic frame from the side's current contact forces.
        Without overrides the frame gets the scene-local counter and clock."""
        self.frame_seq += 1
        taxels = tuple(taxelize(f, self.rng) if f > 0.0 else _ZERO_TAXELS
                       for f in self.sides[side].forces)
        return HapticFrame(
            taxels,
            t_us=int(round(self.time * 1e6)) if t_us is None else t_us,
            seq=self.frame_seq if seq is None else seq)

    def current_indent_mm(self, side: str) -> float:
        return self.sides[side].indent_mm


def step(scene: SimScene, controls: dict, dt: float = CONTROL_DT):
    """Module-level tick: returns (scene, {side: HapticFrame})."""
    frames = scene.step(controls, dt)
    return scene, frames


def grasp_success(scene: SimScene, obj: SimObject, side: str = "right") -> bool:
    """Grasp criterion: at least two fingers in contact with opposing force
    components, each at >= 0.2 N, and the object moves less than 5 mm in a
    simulated lift test (Coulomb friction against its weight)."""
    forces = scene.sides[side].forces
    thumb = forces[THUMB]
    others = sum(forces[1:])
    strongest_other = max(forces[1:])
    if thumb < 0.2 or strongest_other < 0.2:
        return False
    _, centered = scene._proximity(side)
    if not centered:
        return False  # off-center pinch: the lift sheds the object
    normal = min(thumb, others)
    capacity = 2.0 * obj.friction * normal
    displacement_m = 0.0 if capacity >= obj.mass * GRAVITY else 0.05
    return displacement_m < 0.005


# -- named scenes ----------------------------------------------------------

STIFFNESS_TRIPLET = (200.0, 800.0, 3000.0)

_GRASP_BENDS = (0.30, 0.30, 0.32, 1.0, 1.0)
_PEN_BENDS = (0.40, 0.40, 0.42, 1.0, 1.0)


def _bottle(name: str, k: float) -> SimObject:
    return SimObject(name=name, kind="rigid", stiffness=k,
                     contact_bend=_GRASP_BENDS)


SCENE_NAMES = ("empty", "coke_bottle", "soft_bottle", "hard_bottle",
               "deformable_bottle", "pen", "blind_box", "fruit_basket")


def build_scene(name: str, seed: int = 0,
                retarget: RetargetConfig | None = None) -> SimScene:
    """Construct a named scene. Experiment scripts and session configs
    reference scenes by these names."""
    retarget = retarget or RetargetConfig()
    if name == "empty":
        return SimScene(retarget, seed=seed)
    if name == "coke_bottle":
        return SimScene(retarget, {"right": _bottle(name, 200.0)}, seed=seed)
    if name == "soft_bottle":
        return SimScene(retarget, {"right": _bottle(name, 800.0)}, seed=seed)
    if name == "hard_bottle":
        return SimScene(retarget, {"right": _bottle(name, 3000.0)}, seed=seed)
    if name == "deformable_bottle":
        obj = SimObject(name=name, kind="deformable", stiffness=150.0,
                        contact_bend=_GRASP_BENDS, plasticity=0.35,
                        max_indent=0.35)
        return SimScene(retarget, {"right": obj}, seed=seed)
    if name == "pen":
        grip_obj = SimObject(name="pen", kind="pen", stiffness=50.0,
                             contact_bend=_PEN_BENDS, max_indent=0.3)
        held = HandPose(bend=(0.5, 0.5, 0.5, 0.0, 0.0))
        return SimScene(retarget, {"right": grip_obj},
                        pen=PenState(theta=math.radians(10.0)), seed=seed,
                        initial_hand={"right": held})
    if name == "blind_box":
        box = sample_box_scene(seed)
        obj = SimObject(name="hidden", kind="rigid", stiffness=1200.0,
                        contact_bend=(0.35, 0.35, 0.37, 1.0, 1.0),
                        width=box.object_width)
        return SimScene(retarget, {"right": obj}, box=box, seed=seed)
    if name == "fruit_basket":
        basket = SimObject(name="basket", kind="rigid", stiffness=400.0,
                           contact_bend=_GRASP_BENDS, mass=0.25)
        orange = SimObject(name="orange", kind="deformable", stiffness=120.0,
                           contact_bend=_GRASP_BENDS, plasticity=0.3,
                           mass=0.15)
        return SimScene(retarget, {"left": basket, "right": orange}, seed=seed)
    raise ConfigError(f"unknown scene {name!r}; known: {', '.join(SCENE_NAMES)}")


def scene_from_dict(spec: dict, retarget: RetargetConfig | None = None) -> SimScene:
    """Build a scene from the JSON config representation."""
    if isinstance(spec, str):
        return build_scene(spec, seed=0, retarget=retarget)
    objects = {}
    for side, entry in spec.get("objects", {}).items():
        objects[side] = SimObject(
            name=entry.get("name", f"{side}_object"),
            kind=entry.get("kind", "rigid"),
            stiffness=float(entry.get("stiffness", 800.0)),
            contact_bend=tuple(entry.get("contact_bend", _GRASP_BENDS)),
            plasticity=float(entry.get("plasticity", 0.0)),
            indent_mm_per_unit=float(entry.get("indent_mm_per_unit", 25.0)),
            mass=float(entry.get("mass", 0.1)),
            friction=float(entry.get("friction", 0.6)),
            width=float(entry.get("width", 0.06)),
            max_indent=float(entry.get("max_indent", 0.05)),
        )
    pen = None
    if "pen" in spec:
        p = spec["pen"]
        pen = PenState(theta=float(p.get("theta", 0.17)),
                       omega=float(p.get("omega", 0.0)),
                       mass=float(p.get("mass", 0.02)),
                       com_dist=float(p.get("com_dist", 0.06)),
                       inertia=float(p.get("inertia", 1.05e-4)),
                       contact_radius=float(p.get("contact_radius", 0.005)),
                       mu=float(p.get("mu", 0.5)))
    box = None
    if "box_seed" in spec:
        box = sample_box_scene(int(spec["box_seed"]))
    return SimScene(retarget or RetargetConfig(), objects, pen=pen, box=box,
                    seed=int(spec.get("seed", 0)),
                    slew_rate=float(spec.get("slew_rate", DEFAULT_SLEW_RATE)))

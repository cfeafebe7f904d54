"""Shared test helpers: randomized wire messages, message equality, the
CSV slope-refit oracle, and a do-nothing operator controller."""
import csv
import io

import numpy as np

from teletact.geometry import random_rotation
from teletact.haptics import HapticFrame
from teletact.policies import Controller
from teletact.protocol import (Control, Glove, Haptic, Hello, RateSpec, Scene,
                               SceneSide, TargetRecord, WristRecord)
from teletact.retargeting import HandPose, RelativePose


class StationaryController(Controller):
    """Wrist at the calibration pose, hand open, forever."""


def random_control(rng):
    return Control(
        side=("left", "right")[int(rng.integers(0, 2))],
        rel=RelativePose(rng.normal(size=3), random_rotation(rng)),
        hand=HandPose(bend=tuple(rng.uniform(0, 1, size=5)),
                      thumb_split=float(rng.uniform(0, 1))),
        seq=int(rng.integers(0, 2**32)),
        t_us=int(rng.integers(0, 2**50)))


def random_haptic(rng):
    taxels = tuple(rng.integers(0, 65536, size=(4, 4)).astype(np.uint16)
                   for _ in range(5))
    frame = HapticFrame(taxels, t_us=int(rng.integers(0, 2**50)),
                        seq=int(rng.integers(0, 2**32)))
    return Haptic(side=("left", "right")[int(rng.integers(0, 2))], frame=frame)


def random_scene(rng):
    def side():
        return SceneSide(
            bend=tuple(rng.uniform(0, 1, size=5)),
            split=float(rng.uniform(0, 1)),
            ee_pos=tuple(rng.normal(size=3)),
            ee_rot=tuple(random_rotation(rng).reshape(9)),
            force=tuple(rng.uniform(0, 30, size=5)),
            indent_mm=float(rng.uniform(0, 10)),
            joints=tuple(rng.normal(size=7)))

    n_obj = int(rng.integers(0, 4))
    objects = tuple(
        (f"obj{i}", ("rigid", "deformable", "pen")[int(rng.integers(0, 3))],
         float(rng.uniform(1, 5000)))
        for i in range(n_obj))
    pen = None if rng.integers(0, 2) else (float(rng.uniform(0, 2)),
                                           float(rng.normal()))
    return Scene(t=float(rng.uniform(0, 100)), left=side(), right=side(),
                 pen=pen, deform_total_mm=float(rng.uniform(0, 50)),
                 deform_entries=int(rng.integers(0, 1000)), objects=objects,
                 seq=int(rng.integers(0, 2**32)),
                 t_us=int(rng.integers(0, 2**50)))


def random_message(rng):
    kind = int(rng.integers(0, 6))
    if kind == 0:
        return Hello(role=("robot", "operator", "bridge")[int(rng.integers(0, 3))],
                     rates=RateSpec(float(rng.uniform(1, 1000)),
                                    float(rng.uniform(1, 200)),
                                    float(rng.uniform(1, 100))),
                     seq=int(rng.integers(0, 2**32)),
                     t_us=int(rng.integers(0, 2**50)))
    if kind == 1:
        return random_control(rng)
    if kind == 2:
        return random_haptic(rng)
    if kind == 3:
        return random_scene(rng)
    if kind == 4:
        return Glove(side=("left", "right")[int(rng.integers(0, 2))],
                     tau=tuple(rng.uniform(0, 0.5, size=5)),
                     seq=int(rng.integers(0, 2**32)),
                     t_us=int(rng.integers(0, 2**50)))
    side = ("left", "right")[int(rng.integers(0, 2))]
    pos = tuple(rng.normal(size=3))
    rot = tuple(random_rotation(rng).reshape(9))
    seq = int(rng.integers(0, 2**32))
    t_us = int(rng.integers(0, 2**50))
    if rng.integers(0, 2):
        return WristRecord(side=side, p_now=pos, r_gn=rot, seq=seq, t_us=t_us)
    return TargetRecord(side=side, k_now=pos, q_gn=rot, seq=seq, t_us=t_us)


def messages_equal(a, b) -> bool:
    if type(a) is not type(b):
        return False
    if isinstance(a, Haptic):
        return (a.side == b.side and a.frame.seq == b.frame.seq
                and a.frame.t_us == b.frame.t_us
                and all(np.array_equal(x, y)
                        for x, y in zip(a.frame.taxels, b.frame.taxels)))
    if isinstance(a, Control):
        return (a.side == b.side and a.seq == b.seq and a.t_us == b.t_us
                and np.array_equal(a.rel.p_l, b.rel.p_l)
                and np.array_equal(a.rel.r_ln, b.rel.r_ln)
                and a.hand == b.hand)
    return a == b


def refit_slopes_from_csv(text: str) -> dict:
    """Independent least-squares slopes off the CSV rows: one fit per
    (object, finger) curve, averaged per object."""
    rows = list(csv.DictReader(io.StringIO(text)))
    curves = {}
    for row in rows:
        key = (row["object"], row["finger"])
        curves.setdefault(key, ([], []))
        curves[key][0].append(float(row["bend"]))
        curves[key][1].append(float(row["force"]))
    per_object = {}
    for (name, _), (bends, forces) in curves.items():
        bend = np.array(bends)
        force = np.array(forces)
        mask = force > 0.05
        if mask.sum() < 2:
            continue
        a = np.vstack([bend[mask], np.ones(int(mask.sum()))]).T
        slope, _ = np.linalg.lstsq(a, force[mask], rcond=None)[0]
        per_object.setdefault(name, []).append(slope)
    return {name: float(np.mean(s)) for name, s in per_object.items()}

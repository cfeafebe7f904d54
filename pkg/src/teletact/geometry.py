"""Minimal 3-D pose algebra: vectors, rotation matrices, frame composition.

Positions are plain length-3 float arrays (meters), rotations are 3x3
matrices whose columns are the child frame's axes expressed in the parent
frame. Frames are right-handed throughout. Everything here is a pure
function over immutable values.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Orthonormality tolerance on ingest; chained products get repaired once
# drift exceeds this.
ROT_TOL = 1e-9


class NotARotation(ValueError):
    """Matrix failed the orthonormality / right-handedness check."""


class Degenerate(ValueError):
    """Matrix cannot be repaired into a rotation (near-zero column or flip)."""


def vec3(x: float, y: float, z: float) -> np.ndarray:
    return np.array([x, y, z], dtype=float)


def identity_rot() -> np.ndarray:
    return np.eye(3)


def check_vec3(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (3,):
        raise ValueError(f"expected length-3 vector, got shape {v.shape}")
    if not (math.isfinite(v[0]) and math.isfinite(v[1]) and math.isfinite(v[2])):
        raise ValueError("vector components must be finite")
    return v


def _unpack9(r: np.ndarray):
    # Scalar math beats numpy reductions at 3x3 size; these checks sit on
    # the 500 Hz path.
    return r.ravel().tolist()


def rotation_defect(r: np.ndarray) -> float:
    """Frobenius distance of R^T R from the identity."""
    a, b, c, d, e, f, g, h, i = _unpack9(np.asarray(r, dtype=float))
    # Columns of R dotted pairwise.
    xx = a * a + d * d + g * g - 1.0
    yy = b * b + e * e + h * h - 1.0
    zz = c * c + f * f + i * i - 1.0
    xy = a * b + d * e + g * h
    xz = a * c + d * f + g * i
    yz = b * c + e * f + h * i
    return math.sqrt(xx * xx + yy * yy + zz * zz
                     + 2.0 * (xy * xy + xz * xz + yz * yz))


def det3(r: np.ndarray) -> float:
    a, b, c, d, e, f, g, h, i = _unpack9(np.asarray(r, dtype=float))
    return a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g)


def check_rotation(r, tol: float = ROT_TOL) -> np.ndarray:
    """Validate a 3x3 right-handed orthonormal matrix and return it as float."""
    r = np.asarray(r, dtype=float)
    if r.shape != (3, 3):
        raise NotARotation(f"expected 3x3 matrix, got shape {r.shape}")
    vals = _unpack9(r)
    for v in vals:
        if not math.isfinite(v):
            raise NotARotation("rotation entries must be finite")
    if rotation_defect(r) > tol:
        raise NotARotation(f"matrix is not orthonormal within {tol}")
    if det3(r) < 0.0:
        raise NotARotation("matrix is a reflection (det < 0)")
    return r


def rot_inverse(r: np.ndarray) -> np.ndarray:
    """Inverse of a rotation matrix (its transpose)."""
    r = check_rotation(r)
    return r.T.copy()


def reorthonormalize(m) -> np.ndarray:
    """Repair a drifted 3x3 matrix into a rotation by Gram-Schmidt.

    Columns are processed in x, y, z order, so the x axis is preserved
    exactly (up to normalization). Raises Degenerate when a column is
    near zero or the input is left-handed.
    """
    m = np.asarray(m, dtype=float)
    if m.shape != (3, 3):
        raise Degenerate(f"expected 3x3 matrix, got shape {m.shape}")
    x, y, z = m[:, 0].copy(), m[:, 1].copy(), m[:, 2].copy()
    nx = np.linalg.norm(x)
    if nx < 1e-9:
        raise Degenerate("first column has near-zero norm")
    x /= nx
    y = y - (x @ y) * x
    ny = np.linalg.norm(y)
    if ny < 1e-9:
        raise Degenerate("second column degenerate after projection")
    y /= ny
    z = z - (x @ z) * x - (y @ z) * y
    nz = np.linalg.norm(z)
    if nz < 1e-9:
        raise Degenerate("third column degenerate after projection")
    z /= nz
    r = np.column_stack([x, y, z])
    if np.linalg.det(r) <= 0.0:
        raise Degenerate("input is left-handed (det <= 0)")
    return r


def ensure_rotation(r: np.ndarray) -> np.ndarray:
    """Return r unchanged if within tolerance, else a repaired copy."""
    r = np.asarray(r, dtype=float)
    if rotation_defect(r) <= ROT_TOL:
        return r
    return reorthonormalize(r)


@dataclass(frozen=True)
class Pose:
    """Rigid transform: position of the child origin plus child axes, both
    expressed in the parent frame."""

    position: np.ndarray
    orientation: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "position", check_vec3(self.position))
        object.__setattr__(self, "orientation", check_rotation(self.orientation))

    @staticmethod
    def identity() -> "Pose":
        return Pose(np.zeros(3), np.eye(3))

    def as_matrix(self) -> np.ndarray:
        """4x4 homogeneous matrix."""
        h = np.eye(4)
        h[:3, :3] = self.orientation
        h[:3, 3] = self.position
        return h

    @staticmethod
    def from_matrix(h: np.ndarray) -> "Pose":
        h = np.asarray(h, dtype=float)
        return Pose(h[:3, 3].copy(), h[:3, :3].copy())

    def transform_point(self, p) -> np.ndarray:
        """Map a point from the child frame into the parent frame."""
        return self.orientation @ check_vec3(p) + self.position


def pose_between(a: Pose, b: Pose) -> Pose:
    """Pose of b expressed in a's frame (a^-1 composed with b)."""
    r_inv = a.orientation.T
    return Pose(r_inv @ (b.position - a.position),
                ensure_rotation(r_inv @ b.orientation))


def rot_x(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def axis_angle(axis, angle: float) -> np.ndarray:
    """Rodrigues rotation about a (not necessarily unit) axis."""
    axis = check_vec3(axis)
    n = np.linalg.norm(axis)
    if n < 1e-12:
        return np.eye(3)
    x, y, z = axis / n
    k = np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])
    return np.eye(3) + np.sin(angle) * k + (1.0 - np.cos(angle)) * (k @ k)


def rotation_angle(r: np.ndarray) -> float:
    """Magnitude of the axis-angle representation of r, in radians."""
    tr = np.clip((np.trace(r) - 1.0) * 0.5, -1.0, 1.0)
    return float(np.arccos(tr))


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Uniform random rotation built from a random unit quaternion."""
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])

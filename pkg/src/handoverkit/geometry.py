"""Rigid poses, distance metrics, and the voxelized workspace map.

World frames use meters, with +y as the vertical (up) axis. Orientations are
unit quaternions in (w, x, y, z) order.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

# A pose quaternion must be unit within this tolerance.
QUAT_NORM_TOL = 1e-9

IDENTITY_QUAT = (1.0, 0.0, 0.0, 0.0)


class OutOfBounds(Exception):
    """Point lies outside the voxel map volume."""


def _vec3(value) -> np.ndarray:
    v = np.asarray(value, dtype=float)
    if v.shape != (3,):
        raise ValueError(f"expected a 3-vector, got shape {v.shape}")
    return v


def _quat4(value) -> np.ndarray:
    q = np.asarray(value, dtype=float)
    if q.shape != (4,):
        raise ValueError(f"expected quaternion (w, x, y, z), got shape {q.shape}")
    return q


@dataclass(frozen=True, eq=False)
class Pose:
    """Position (m) plus unit quaternion orientation (w, x, y, z)."""

    position: np.ndarray
    orientation: np.ndarray = field(default_factory=lambda: np.array(IDENTITY_QUAT))

    def __post_init__(self):
        object.__setattr__(self, "position", _vec3(self.position))
        object.__setattr__(self, "orientation", _quat4(self.orientation))
        if not np.all(np.isfinite(self.position)):
            raise ValueError("pose position must be finite")
        if not np.all(np.isfinite(self.orientation)):
            raise ValueError("pose orientation must be finite")
        norm = float(np.linalg.norm(self.orientation))
        if abs(norm - 1.0) > QUAT_NORM_TOL:
            raise ValueError(
                f"quaternion norm {norm!r} deviates from 1.0 by more than {QUAT_NORM_TOL}"
            )

    def __eq__(self, other):
        if not isinstance(other, Pose):
            return NotImplemented
        return np.array_equal(self.position, other.position) and np.array_equal(
            self.orientation, other.orientation
        )

    def translated(self, offset) -> "Pose":
        return Pose(self.position + _vec3(offset), self.orientation.copy())

    def to_dict(self) -> dict:
        return {
            "position": [float(x) for x in self.position],
            "orientation": [float(x) for x in self.orientation],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Pose":
        return cls(data["position"], data.get("orientation", list(IDENTITY_QUAT)))


def pose_from_xyz(x: float, y: float, z: float) -> Pose:
    return Pose(np.array([x, y, z], dtype=float))


# --- quaternion helpers -----------------------------------------------------

def quat_normalize(q) -> np.ndarray:
    q = _quat4(q)
    return q / np.linalg.norm(q)


def quat_multiply(a, b) -> np.ndarray:
    aw, ax, ay, az = _quat4(a)
    bw, bx, by, bz = _quat4(b)
    return np.array(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ]
    )


def quat_conjugate(q) -> np.ndarray:
    w, x, y, z = _quat4(q)
    return np.array([w, -x, -y, -z])


def quat_rotate(q, v) -> np.ndarray:
    """Rotate vector v by unit quaternion q."""
    w, x, y, z = _quat4(q)
    u = np.array([x, y, z])
    v = _vec3(v)
    # v' = v + 2 w (u x v) + 2 (u x (u x v))
    uv = np.cross(u, v)
    return v + 2.0 * (w * uv + np.cross(u, uv))


def quat_from_axis_angle(axis, angle_rad: float) -> np.ndarray:
    axis = _vec3(axis)
    n = np.linalg.norm(axis)
    if n == 0.0:
        raise ValueError("rotation axis must be nonzero")
    half = 0.5 * angle_rad
    return np.concatenate([[math.cos(half)], math.sin(half) * axis / n])


def transform_pose(parent: Pose, child: Pose) -> Pose:
    """Compose child (expressed in parent's frame) into the world frame."""
    position = parent.position + quat_rotate(parent.orientation, child.position)
    orientation = quat_normalize(quat_multiply(parent.orientation, child.orientation))
    return Pose(position, orientation)


def transform_point(parent: Pose, point) -> np.ndarray:
    return parent.position + quat_rotate(parent.orientation, _vec3(point))


# --- metric operations ------------------------------------------------------

def point_distance(a: Pose, b: Pose) -> float:
    """Euclidean distance between pose positions; orientations are ignored."""
    return float(np.linalg.norm(a.position - b.position))


def angular_distance(a: Pose, b: Pose) -> float:
    """Geodesic angle between orientations in degrees, in [0, 180].

    The absolute value of the quaternion dot product collapses the double
    cover, so q and -q are the same rotation and measure 0 apart.
    """
    dot = abs(float(np.dot(a.orientation, b.orientation)))
    dot = min(dot, 1.0)  # guard acos domain against rounding
    return math.degrees(2.0 * math.acos(dot))


# --- voxel map ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class VoxelMap:
    """Axis-aligned voxel grid: origin corner, cubic voxel edge, counts."""

    origin: np.ndarray
    resolution: float
    dims: tuple[int, int, int]

    def __post_init__(self):
        object.__setattr__(self, "origin", _vec3(self.origin))
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        if len(self.dims) != 3 or any(d < 1 for d in self.dims):
            raise ValueError(f"dims must be three positive ints, got {self.dims}")
        if not (self.resolution > 0.0 and math.isfinite(self.resolution)):
            raise ValueError(f"resolution must be positive, got {self.resolution}")

    @property
    def upper(self) -> np.ndarray:
        return self.origin + self.resolution * np.asarray(self.dims, dtype=float)

    def contains(self, point) -> bool:
        p = _vec3(point)
        # lower bound inclusive, upper exclusive
        return bool(np.all(p >= self.origin) and np.all(p < self.upper))

    def voxel_count(self) -> int:
        return self.dims[0] * self.dims[1] * self.dims[2]


def voxel_index(vmap: VoxelMap, point) -> tuple[int, int, int]:
    """Voxel containing the point. Raises OutOfBounds outside the volume."""
    p = _vec3(point)
    if not vmap.contains(p):
        raise OutOfBounds(f"point {p.tolist()} outside map volume")
    raw = np.floor((p - vmap.origin) / vmap.resolution).astype(int)
    # containment already guarantees the range; clip only absorbs float edge dust
    idx = np.clip(raw, 0, np.asarray(vmap.dims) - 1)
    return int(idx[0]), int(idx[1]), int(idx[2])


def voxel_center(vmap: VoxelMap, index) -> np.ndarray:
    ix, iy, iz = (int(i) for i in index)
    for i, d in zip((ix, iy, iz), vmap.dims):
        if i < 0 or i >= d:
            raise OutOfBounds(f"voxel index {(ix, iy, iz)} outside dims {vmap.dims}")
    return vmap.origin + vmap.resolution * (np.array([ix, iy, iz], dtype=float) + 0.5)


def voxels_by_hand_proximity(vmap: VoxelMap, hand: Pose) -> list[tuple[int, int, int]]:
    """All voxel indices ordered by center distance to the hand.

    Equal distances fall back to lexicographic (ix, iy, iz) order so the scan
    order is total and deterministic.
    """
    hand_p = hand.position
    order = []
    for ix, iy, iz in itertools.product(*(range(d) for d in vmap.dims)):
        center = vmap.origin + vmap.resolution * (np.array([ix, iy, iz], dtype=float) + 0.5)
        dist = float(np.linalg.norm(center - hand_p))
        order.append((dist, ix, iy, iz))
    order.sort()
    return [(ix, iy, iz) for _, ix, iy, iz in order]

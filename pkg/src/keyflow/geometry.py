"""SE(3) poses, quaternion algebra, and rigid point transforms.

Quaternions are stored (w, x, y, z) and kept on the canonical hemisphere
(first nonzero component positive) so that serialized poses are unique.
All arrays are float64; the rest of the package leans on that precision.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError

_QUAT_NORM_TOL = 1e-6
_QUAT_DEGENERATE = 1e-8


def _as_finite(a, shape, name: str) -> np.ndarray:
    arr = np.asarray(a, dtype=np.float64)
    if arr.shape != shape:
        raise InvalidArgumentError(f"{name} must have shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentError(f"{name} contains non-finite values")
    return arr


def canonicalize_quaternion(q: np.ndarray) -> np.ndarray:
    """Normalize and flip sign so the first nonzero component is positive."""
    q = np.asarray(q, dtype=np.float64)
    norm = float(np.linalg.norm(q))
    if norm < _QUAT_DEGENERATE:
        raise InvalidArgumentError(f"degenerate quaternion with norm {norm:.3e}")
    q = q / norm
    for c in q:
        if c > 0.0:
            break
        if c < 0.0:
            q = -q
            break
    return q


def quat_multiply(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ]
    )


def quat_conjugate(q: np.ndarray) -> np.ndarray:
    return np.array([q[0], -q[1], -q[2], -q[3]])


def quat_to_matrix(q: np.ndarray) -> np.ndarray:
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def quat_from_axis_angle(axis, angle: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=np.float64)
    n = np.linalg.norm(axis)
    if n < _QUAT_DEGENERATE:
        raise InvalidArgumentError("rotation axis has near-zero norm")
    axis = axis / n
    half = 0.5 * angle
    return canonicalize_quaternion(
        np.concatenate([[np.cos(half)], np.sin(half) * axis])
    )


def quat_from_matrix(m: np.ndarray) -> np.ndarray:
    """Convert a rotation matrix to a canonical quaternion (Shepperd's method)."""
    m = np.asarray(m, dtype=np.float64)
    t = np.trace(m)
    if t > 0:
        s = np.sqrt(t + 1.0) * 2.0
        q = np.array(
            [0.25 * s, (m[2, 1] - m[1, 2]) / s, (m[0, 2] - m[2, 0]) / s, (m[1, 0] - m[0, 1]) / s]
        )
    else:
        i = int(np.argmax(np.diag(m)))
        j, k = (i + 1) % 3, (i + 2) % 3
        s = np.sqrt(1.0 + m[i, i] - m[j, j] - m[k, k]) * 2.0
        q = np.empty(4)
        q[0] = (m[k, j] - m[j, k]) / s
        q[1 + i] = 0.25 * s
        q[1 + j] = (m[j, i] + m[i, j]) / s
        q[1 + k] = (m[k, i] + m[i, k]) / s
    return canonicalize_quaternion(q)


def quat_rotation_angle(q: np.ndarray) -> float:
    """Angle of the rotation represented by q, in [0, pi]."""
    w = abs(float(q[0]))
    v = float(np.linalg.norm(q[1:]))
    return 2.0 * np.arctan2(v, w)


def quat_slerp(a: np.ndarray, b: np.ndarray, frac: float) -> np.ndarray:
    dot = float(np.dot(a, b))
    if dot < 0.0:
        b = -b
        dot = -dot
    dot = min(dot, 1.0)
    theta = np.arccos(dot)
    if theta < 1e-9:
        return canonicalize_quaternion(a + frac * (b - a))
    s = np.sin(theta)
    return canonicalize_quaternion(
        (np.sin((1.0 - frac) * theta) / s) * a + (np.sin(frac * theta) / s) * b
    )


@dataclass(frozen=True)
class Pose:
    """Rigid transform: rotate by `orientation`, then translate by `position`."""

    position: np.ndarray
    orientation: np.ndarray  # (w, x, y, z), unit norm, canonical hemisphere

    def __post_init__(self):
        pos = _as_finite(self.position, (3,), "position")
        q = _as_finite(self.orientation, (4,), "orientation")
        norm = float(np.linalg.norm(q))
        if norm < _QUAT_DEGENERATE:
            raise InvalidArgumentError(f"degenerate quaternion with norm {norm:.3e}")
        if abs(norm - 1.0) > _QUAT_NORM_TOL:
            raise InvalidArgumentError(f"quaternion norm {norm} is not within 1e-6 of 1")
        q = canonicalize_quaternion(q)
        pos.setflags(write=False)
        q.setflags(write=False)
        object.__setattr__(self, "position", pos)
        object.__setattr__(self, "orientation", q)

    @staticmethod
    def identity() -> "Pose":
        return Pose(np.zeros(3), np.array([1.0, 0.0, 0.0, 0.0]))

    @staticmethod
    def from_parts(position, orientation) -> "Pose":
        """Build from possibly unnormalized quaternion (renormalizes first)."""
        q = _as_finite(orientation, (4,), "orientation")
        return Pose(np.asarray(position, dtype=np.float64), canonicalize_quaternion(q))

    @staticmethod
    def from_xyz(x: float, y: float, z: float) -> "Pose":
        return Pose(np.array([x, y, z], dtype=np.float64), np.array([1.0, 0.0, 0.0, 0.0]))

    def rotation_matrix(self) -> np.ndarray:
        return quat_to_matrix(self.orientation)

    def as_matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.rotation_matrix()
        m[:3, 3] = self.position
        return m

    def as_vector(self) -> np.ndarray:
        """(x, y, z, qw, qx, qy, qz) flat layout used by actions and states."""
        return np.concatenate([self.position, self.orientation])

    @staticmethod
    def from_vector(v) -> "Pose":
        v = _as_finite(v, (7,), "pose vector")
        return Pose.from_parts(v[:3], v[3:])


@dataclass(frozen=True)
class PointSet:
    """N points with optional per-point features; coordinates in meters."""

    points: np.ndarray
    features: np.ndarray | None = field(default=None)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape[0] < 1:
            raise InvalidArgumentError(f"points must be (N>=1, 3), got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise InvalidArgumentError("points contain non-finite values")
        object.__setattr__(self, "points", pts)
        if self.features is not None:
            feats = np.asarray(self.features)
            if feats.ndim != 2 or feats.shape[0] != pts.shape[0]:
                raise InvalidArgumentError(
                    f"features must be (N, D) aligned with points, got {feats.shape}"
                )
            object.__setattr__(self, "features", feats)

    def __len__(self) -> int:
        return self.points.shape[0]


def pose_compose(a: Pose, b: Pose) -> Pose:
    """Transform equal to applying b first, then a."""
    q = quat_multiply(a.orientation, b.orientation)
    t = a.position + a.rotation_matrix() @ b.position
    return Pose.from_parts(t, q)


def pose_inverse(a: Pose) -> Pose:
    q_inv = quat_conjugate(a.orientation)
    t_inv = -(quat_to_matrix(q_inv) @ a.position)
    return Pose.from_parts(t_inv, q_inv)


def transform_points(pose: Pose, point_set: PointSet) -> PointSet:
    """Apply R p + t to every point; features pass through unchanged."""
    pts = point_set.points @ pose.rotation_matrix().T + pose.position
    return PointSet(pts, point_set.features)


def transform_array(pose: Pose, points: np.ndarray) -> np.ndarray:
    """Array-in, array-out variant of transform_points for (N, 3) data."""
    points = np.asarray(points, dtype=np.float64)
    return points @ pose.rotation_matrix().T + pose.position


def relative_transform(from_pose: Pose, to_pose: Pose) -> Pose:
    """Transform mapping points rigidly attached at `from_pose` to `to_pose`."""
    return pose_compose(to_pose, pose_inverse(from_pose))

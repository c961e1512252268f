"""State, action, camera, and observation types for the kinematic world."""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

import numpy as np

from ..errors import InvalidArgumentError
from ..geometry import Pose, quat_from_matrix
from .shapes import Shape

LEFT = "left"
RIGHT = "right"
SIDES = (LEFT, RIGHT)

FEATURE_DIM = 16  # synthetic per-object semantic signature width


@dataclass(frozen=True)
class GripperState:
    pose: Pose
    openness: float  # 0 closed .. 1 open

    def __post_init__(self):
        if not np.isfinite(self.openness) or not 0.0 <= self.openness <= 1.0:
            raise InvalidArgumentError(f"openness {self.openness} outside [0, 1]")


@dataclass(frozen=True)
class ObjectState:
    object_id: int
    name: str
    shape: Shape
    pose: Pose
    attach_points: np.ndarray  # (M, 3) local-frame grasp/contact points
    static: bool = False

    def attach_points_world(self) -> np.ndarray:
        return self.attach_points @ self.pose.rotation_matrix().T + self.pose.position


@dataclass(frozen=True)
class Attachment:
    object_id: int
    relative: Pose  # object pose expressed in the holding gripper's frame
    since: int  # step index when the grasp latched; earliest holder drives


@dataclass(frozen=True)
class AttachEvent:
    time: int
    side: str
    object_id: int
    kind: str  # "attach" | "detach"


@dataclass(frozen=True)
class WorldState:
    """Immutable snapshot of the kinematic scene.

    `events` and `trails` accumulate grasp transitions and object motion so
    task scoring can remain a pure function of the final state.
    """

    left: GripperState
    right: GripperState
    objects: tuple[ObjectState, ...]
    attachments: Mapping[str, Attachment]
    events: tuple[AttachEvent, ...]
    trails: Mapping[int, tuple[tuple[int, float, float, float], ...]]
    time: int

    def __post_init__(self):
        object.__setattr__(self, "attachments", MappingProxyType(dict(self.attachments)))
        object.__setattr__(self, "trails", MappingProxyType(dict(self.trails)))

    def gripper(self, side: str) -> GripperState:
        if side == LEFT:
            return self.left
        if side == RIGHT:
            return self.right
        raise InvalidArgumentError(f"unknown side {side!r}")

    def object_by_id(self, object_id: int) -> ObjectState:
        for obj in self.objects:
            if obj.object_id == object_id:
                return obj
        raise InvalidArgumentError(f"no object with id {object_id}")

    def object_by_name(self, name: str) -> ObjectState:
        for obj in self.objects:
            if obj.name == name:
                return obj
        raise InvalidArgumentError(f"no object named {name!r}")

    def is_attached(self, side: str, object_id: int) -> bool:
        att = self.attachments.get(side)
        return att is not None and att.object_id == object_id

    def was_attached(self, side: str, object_id: int) -> bool:
        return any(
            e.kind == "attach" and e.side == side and e.object_id == object_id
            for e in self.events
        )


@dataclass(frozen=True)
class ArmAction:
    pose: Pose
    openness: float

    def __post_init__(self):
        if not np.isfinite(self.openness):
            raise InvalidArgumentError("openness target is non-finite")

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.pose.as_vector(), [self.openness]])


@dataclass(frozen=True)
class BimanualAction:
    """Target gripper poses and openness for both arms (16 scalars)."""

    left: ArmAction
    right: ArmAction

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.left.as_vector(), self.right.as_vector()])

    @staticmethod
    def from_vector(v) -> "BimanualAction":
        v = np.asarray(v, dtype=np.float64)
        if v.shape != (16,):
            raise InvalidArgumentError(f"action vector must have shape (16,), got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise InvalidArgumentError("action vector contains non-finite values")
        return BimanualAction(
            ArmAction(Pose.from_vector(v[:7]), float(v[7])),
            ArmAction(Pose.from_vector(v[8:15]), float(v[15])),
        )


@dataclass(frozen=True)
class Camera:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int
    extrinsics: Pose  # world -> camera transform

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise InvalidArgumentError("focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise InvalidArgumentError("principal point outside the image")

    @staticmethod
    def look_at(
        eye,
        target,
        fx: float = 70.0,
        fy: float = 70.0,
        width: int = 64,
        height: int = 64,
        up=(0.0, 0.0, 1.0),
    ) -> "Camera":
        """Camera at `eye` with +z toward `target` (y points image-down)."""
        eye = np.asarray(eye, dtype=np.float64)
        forward = np.asarray(target, dtype=np.float64) - eye
        forward = forward / np.linalg.norm(forward)
        x_cam = np.cross(forward, np.asarray(up, dtype=np.float64))
        x_cam = x_cam / np.linalg.norm(x_cam)
        y_cam = np.cross(forward, x_cam)
        y_cam = y_cam / np.linalg.norm(y_cam)
        r = np.stack([x_cam, y_cam, forward])  # rows: camera axes in world
        return Camera(
            fx=fx,
            fy=fy,
            cx=width / 2.0,
            cy=height / 2.0,
            width=width,
            height=height,
            extrinsics=Pose.from_parts(-(r @ eye), quat_from_matrix(r)),
        )


@dataclass(frozen=True)
class ViewObservation:
    """One rendered view: depth, painted semantic features, and geometry buffers.

    `object_ids` (-1 = background) and `point_map` (exact surfel world
    coordinates of the winning splat) are renderer byproducts that ground-truth
    masking and query-point sampling rely on.
    """

    depth: np.ndarray  # (H, W) float32 meters, 0 = no hit
    feature_map: np.ndarray  # (H, W, D) float32
    camera: Camera
    object_ids: np.ndarray  # (H, W) int32, -1 background
    point_map: np.ndarray  # (H, W, 3) float32 world coords

    def __post_init__(self):
        if np.any(self.depth < 0):
            raise InvalidArgumentError("depth contains negative values")
        if not np.all(np.isfinite(self.feature_map)):
            raise InvalidArgumentError("feature map contains non-finite values")


def object_signature(object_id: int, dim: int = FEATURE_DIM) -> np.ndarray:
    """Fixed unit-norm feature vector for an object id, stable across runs."""
    seed = zlib.crc32(f"object-signature:{object_id}".encode())
    rng = np.random.default_rng(seed)
    v = rng.normal(size=dim)
    return (v / np.linalg.norm(v)).astype(np.float32)

"""Kinematic stepping and point-splat rendering."""

from __future__ import annotations

import numpy as np

from ..errors import InvalidArgumentError
from ..geometry import (
    Pose,
    pose_compose,
    pose_inverse,
    quat_rotation_angle,
    quat_multiply,
    quat_conjugate,
    quat_slerp,
)
from .shapes import surface_samples
from .types import (
    SIDES,
    AttachEvent,
    Attachment,
    BimanualAction,
    Camera,
    GripperState,
    ObjectState,
    ViewObservation,
    WorldState,
    object_signature,
)

V_MAX = 0.05  # m / step linear speed cap
OMEGA_MAX = 0.2  # rad / step angular speed cap
R_GRASP = 0.03  # m attach trigger radius
_TRAIL_EPS = 1e-12


def _move_toward(cur: Pose, target: Pose, v_max: float, w_max: float) -> Pose:
    delta = target.position - cur.position
    dist = float(np.linalg.norm(delta))
    pos = target.position if dist <= v_max else cur.position + delta * (v_max / dist)

    rel_q = quat_multiply(quat_conjugate(cur.orientation), target.orientation)
    angle = quat_rotation_angle(rel_q)
    if angle <= w_max:
        q = target.orientation
    else:
        q = quat_slerp(cur.orientation, target.orientation, w_max / angle)
    return Pose.from_parts(pos, q)


def step(world: WorldState, action: BimanualAction) -> WorldState:
    """Advance one tick: clamped gripper motion, grasp transitions, rigid follow."""
    new_grippers: dict[str, GripperState] = {}
    events = list(world.events)
    attachments = dict(world.attachments)
    t_next = world.time + 1

    objects = {o.object_id: o for o in world.objects}

    for side in SIDES:
        cur = world.gripper(side)
        arm = action.left if side == "left" else action.right
        pose = _move_toward(cur.pose, arm.pose, V_MAX, OMEGA_MAX)
        openness = float(np.clip(arm.openness, 0.0, 1.0))

        closed_now = cur.openness >= 0.5 > openness
        opened_now = cur.openness < 0.5 <= openness

        if closed_now:
            target = _nearest_graspable(objects.values(), pose.position)
            if target is not None:
                attachments[side] = Attachment(
                    target.object_id,
                    pose_compose(pose_inverse(pose), target.pose),
                    since=t_next,
                )
                events.append(AttachEvent(t_next, side, target.object_id, "attach"))
        elif opened_now and side in attachments:
            events.append(AttachEvent(t_next, side, attachments[side].object_id, "detach"))
            del attachments[side]

        new_grippers[side] = GripperState(pose, openness)

    trails = {k: v for k, v in world.trails.items()}
    new_objects = []
    for obj in world.objects:
        # with two holders (co-grasp / mid-handover) the earliest grasp drives
        holders = [
            (att.since, s) for s, att in attachments.items() if att.object_id == obj.object_id
        ]
        if holders:
            holder = min(holders)[1]
            pose = pose_compose(new_grippers[holder].pose, attachments[holder].relative)
            obj = ObjectState(
                obj.object_id, obj.name, obj.shape, pose, obj.attach_points, obj.static
            )
        new_objects.append(obj)
        prev_trail = trails.get(obj.object_id, ())
        moved = (
            not prev_trail
            or np.linalg.norm(np.asarray(prev_trail[-1][1:]) - obj.pose.position)
            > _TRAIL_EPS
        )
        if moved:
            trails[obj.object_id] = prev_trail + (
                (t_next, *(float(c) for c in obj.pose.position)),
            )

    return WorldState(
        left=new_grippers["left"],
        right=new_grippers["right"],
        objects=tuple(new_objects),
        attachments=attachments,
        events=tuple(events),
        trails=trails,
        time=t_next,
    )


def _nearest_graspable(objects, gripper_pos: np.ndarray) -> ObjectState | None:
    best, best_d = None, R_GRASP
    for obj in objects:
        if obj.static:
            continue
        d = float(np.min(np.linalg.norm(obj.attach_points_world() - gripper_pos, axis=1)))
        if d <= best_d:
            best, best_d = obj, d
    return best


def render(world: WorldState, cameras: list[Camera], feature_dim: int = 16) -> list[ViewObservation]:
    """Z-buffered 1-pixel splatting of object surfels into each camera."""
    if not cameras:
        raise InvalidArgumentError("render requires at least one camera")

    all_points = []
    all_ids = []
    signatures: dict[int, np.ndarray] = {}
    for obj in world.objects:
        local = surface_samples(obj.shape)
        pts = local @ obj.pose.rotation_matrix().T + obj.pose.position
        all_points.append(pts)
        all_ids.append(np.full(len(pts), obj.object_id, dtype=np.int32))
        signatures[obj.object_id] = object_signature(obj.object_id, feature_dim)
    points = np.concatenate(all_points) if all_points else np.zeros((0, 3))
    ids = np.concatenate(all_ids) if all_ids else np.zeros(0, dtype=np.int32)

    views = []
    for cam in cameras:
        h, w = cam.height, cam.width
        depth = np.zeros((h, w), dtype=np.float32)
        id_map = np.full((h, w), -1, dtype=np.int32)
        point_map = np.zeros((h, w, 3), dtype=np.float32)
        feature_map = np.zeros((h, w, feature_dim), dtype=np.float32)

        if len(points):
            p_cam = points @ cam.extrinsics.rotation_matrix().T + cam.extrinsics.position
            z = p_cam[:, 2]
            front = z > 1e-6
            u = np.rint(cam.fx * p_cam[front, 0] / z[front] + cam.cx).astype(np.int64)
            v = np.rint(cam.fy * p_cam[front, 1] / z[front] + cam.cy).astype(np.int64)
            inside = (u >= 0) & (u < w) & (v >= 0) & (v < h)
            u, v = u[inside], v[inside]
            zf = z[front][inside]
            idf = ids[front][inside]
            pw = points[front][inside]

            # paint far-to-near so the nearest surfel wins each pixel
            order = np.argsort(-zf, kind="stable")
            u, v, zf, idf, pw = u[order], v[order], zf[order], idf[order], pw[order]
            depth[v, u] = zf.astype(np.float32)
            id_map[v, u] = idf
            point_map[v, u] = pw.astype(np.float32)

        for oid, sig in signatures.items():
            mask = id_map == oid
            if np.any(mask):
                feature_map[mask] = sig

        views.append(
            ViewObservation(
                depth=depth,
                feature_map=feature_map,
                camera=cam,
                object_ids=id_map,
                point_map=point_map,
            )
        )
    return views

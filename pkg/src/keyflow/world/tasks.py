"""Task catalog: scene construction, stage predicates, and scoring metadata.

Four tasks cover the benchmark's analysis axes: precise localization
(handover-insert), coordinated level lifting (lift-bar), curved motion
(sweep-arc), and continuous table-height pushing (push-box).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..errors import UnknownTaskError
from ..geometry import Pose, quat_from_axis_angle
from .shapes import Box, Cylinder
from .types import (
    Camera,
    GripperState,
    ObjectState,
    WorldState,
)

WORKSPACE_LO = np.array([0.20, -0.40, 0.00])
WORKSPACE_HI = np.array([0.80, 0.40, 0.50])

HOME_LEFT = Pose.from_xyz(0.40, 0.22, 0.25)
HOME_RIGHT = Pose.from_xyz(0.40, -0.22, 0.25)

_TASK_SALT = 7041


def default_camera_rig() -> list[Camera]:
    return [
        Camera.look_at(eye=(1.35, 0.0, 0.45), target=(0.50, 0.0, 0.08)),
        Camera.look_at(eye=(0.50, 0.85, 0.70), target=(0.50, 0.0, 0.06)),
    ]


@dataclass(frozen=True)
class TaskSpec:
    task_id: str
    language_id: int
    prompt: str  # name of the manipulated (query) object
    stage_names: tuple[str, ...]
    stage_predicates: tuple[Callable[[WorldState], bool], ...]
    loc_stage_index: int
    step_cap: int
    build_objects: Callable[[np.random.Generator], tuple[ObjectState, ...]]

    @property
    def n_stages(self) -> int:
        return len(self.stage_predicates)


def make_world(task: TaskSpec, seed: int) -> WorldState:
    """Deterministic initial state for (task, seed)."""
    rng = np.random.default_rng([_TASK_SALT, task.language_id, seed])
    objects = task.build_objects(rng)
    trails = {
        o.object_id: ((0, *(float(c) for c in o.pose.position)),) for o in objects
    }
    return WorldState(
        left=GripperState(HOME_LEFT, 1.0),
        right=GripperState(HOME_RIGHT, 1.0),
        objects=objects,
        attachments={},
        events=(),
        trails=trails,
        time=0,
    )


def _yaw_pose(x: float, y: float, z: float, yaw: float) -> Pose:
    return Pose.from_parts(np.array([x, y, z]), quat_from_axis_angle([0, 0, 1], yaw))


def _tilt_from_vertical_z(world_axis: np.ndarray) -> float:
    """Angle between an object's local axis (in world) and the horizontal plane."""
    return abs(float(np.arcsin(np.clip(world_axis[2], -1.0, 1.0))))


def _trail_positions(world: WorldState, oid: int) -> np.ndarray:
    return np.array([p[1:] for p in world.trails.get(oid, ())], dtype=np.float64)


def trail_chord_deviation(world: WorldState, oid: int) -> float:
    """Max distance of an object's recorded path from its start->end chord."""
    pts = _trail_positions(world, oid)
    if len(pts) < 3:
        return 0.0
    a, b = pts[0], pts[-1]
    chord = b - a
    n = np.linalg.norm(chord)
    if n < 1e-9:
        return float(np.max(np.linalg.norm(pts - a, axis=1)))
    d = np.cross(pts - a, chord / n)
    return float(np.max(np.linalg.norm(d, axis=1)))


# ---------------------------------------------------------------- lift-bar

BAR_HALF = (0.15, 0.02, 0.02)
BAR_GRASP_X = 0.12
LIFT_GOAL_Z = (0.19, 0.26)


def _build_lift_bar(rng: np.random.Generator) -> tuple[ObjectState, ...]:
    x = 0.50 + rng.uniform(-0.05, 0.05)
    y = rng.uniform(-0.08, 0.08)
    yaw = rng.uniform(-0.25, 0.25)
    bar = ObjectState(
        object_id=0,
        name="bar",
        shape=Box(BAR_HALF),
        pose=_yaw_pose(x, y, BAR_HALF[2], yaw),
        attach_points=np.array([[BAR_GRASP_X, 0.0, 0.0], [-BAR_GRASP_X, 0.0, 0.0]]),
    )
    return (bar,)


def _bar(world: WorldState) -> ObjectState:
    return world.object_by_id(0)


def _lift_grasped(world: WorldState) -> bool:
    return world.was_attached("left", 0) and world.was_attached("right", 0)


def _lift_both_holding(world: WorldState) -> bool:
    held = {att.object_id for att in world.attachments.values()}
    return held == {0} and len(world.attachments) == 2


def _lift_lifted(world: WorldState) -> bool:
    return _lift_both_holding(world) and _bar(world).pose.position[2] >= 0.10


def _lift_level_carry(world: WorldState) -> bool:
    bar = _bar(world)
    axis = bar.pose.rotation_matrix()[:, 0]
    return (
        _lift_both_holding(world)
        and bar.pose.position[2] >= 0.16
        and _tilt_from_vertical_z(axis) <= 0.08
    )


def _lift_hold_at_goal(world: WorldState) -> bool:
    bar = _bar(world)
    axis = bar.pose.rotation_matrix()[:, 0]
    z = bar.pose.position[2]
    dz = abs(world.left.pose.position[2] - world.right.pose.position[2])
    return (
        _lift_both_holding(world)
        and LIFT_GOAL_Z[0] <= z <= LIFT_GOAL_Z[1]
        and _tilt_from_vertical_z(axis) <= 0.05
        and dz <= 0.01
    )


# ---------------------------------------------------------- handover-insert

PLATE_HALF = (0.06, 0.06, 0.005)
PLATE_GRASP_X = 0.05
TRAY_POSE = Pose.from_xyz(0.40, 0.28, 0.01)
SLOT_CENTER = np.array([0.40, 0.28, 0.035])
HANDOVER_POSE = np.array([0.50, -0.03, 0.18])


def _build_handover(rng: np.random.Generator) -> tuple[ObjectState, ...]:
    x = 0.55 + rng.uniform(-0.05, 0.05)
    y = -0.20 + rng.uniform(-0.05, 0.05)
    yaw = rng.uniform(-0.2, 0.2)
    plate = ObjectState(
        object_id=0,
        name="plate",
        shape=Box(PLATE_HALF),
        pose=_yaw_pose(x, y, PLATE_HALF[2], yaw),
        attach_points=np.array([[PLATE_GRASP_X, 0.0, 0.0], [-PLATE_GRASP_X, 0.0, 0.0]]),
    )
    tray = ObjectState(
        object_id=1,
        name="tray",
        shape=Box((0.07, 0.07, 0.01)),
        pose=TRAY_POSE,
        attach_points=np.zeros((1, 3)),
        static=True,
    )
    return (plate, tray)


def _plate(world: WorldState) -> ObjectState:
    return world.object_by_id(0)


def _ho_right_grasped(world: WorldState) -> bool:
    return world.was_attached("right", 0)


def _ho_handover_done(world: WorldState) -> bool:
    right_attach = [e.time for e in world.events if e.side == "right" and e.kind == "attach" and e.object_id == 0]
    left_attach = [e.time for e in world.events if e.side == "left" and e.kind == "attach" and e.object_id == 0]
    return bool(right_attach) and bool(left_attach) and min(left_attach) > min(right_attach)


def _plate_in_slot(world: WorldState) -> bool:
    plate = _plate(world)
    pos = plate.pose.position
    normal = plate.pose.rotation_matrix()[:, 2]
    flat = abs(abs(float(normal[2])) - 1.0) <= 0.02  # within ~0.2 rad of flat
    return (
        float(np.linalg.norm(pos[:2] - SLOT_CENTER[:2])) <= 0.03
        and 0.015 <= pos[2] <= 0.06
        and flat
    )


def _ho_placed(world: WorldState) -> bool:
    return _ho_handover_done(world) and _plate_in_slot(world)


def _ho_released(world: WorldState) -> bool:
    if not _ho_placed(world):
        return False
    if any(att.object_id == 0 for att in world.attachments.values()):
        return False
    pos = _plate(world).pose.position
    dl = float(np.linalg.norm(world.left.pose.position - pos))
    dr = float(np.linalg.norm(world.right.pose.position - pos))
    return dl >= 0.08 and dr >= 0.08


# ---------------------------------------------------------------- sweep-arc

SWEEP_GOAL = np.array([0.50, 0.25])
SWEEP_GOAL_RADIUS = 0.05
SWEEP_BULGE = 0.12  # lateral arc offset; well past the 5 cm curvature bar
_MIN_CURVE_DEV = 0.04


def _build_sweep(rng: np.random.Generator) -> tuple[ObjectState, ...]:
    x = 0.50 + rng.uniform(-0.04, 0.04)
    y = -0.18 + rng.uniform(-0.04, 0.04)
    puck = ObjectState(
        object_id=0,
        name="puck",
        shape=Cylinder(radius=0.03, height=0.02),
        pose=Pose.from_xyz(x, y, 0.01),
        attach_points=np.array([[0.0, 0.0, 0.01]]),
    )
    return (puck,)


def _puck(world: WorldState) -> ObjectState:
    return world.object_by_id(0)


def _sweep_contacted(world: WorldState) -> bool:
    return world.was_attached("right", 0)


def _sweep_curved_delivery(world: WorldState) -> bool:
    pos = _puck(world).pose.position
    in_goal = float(np.linalg.norm(pos[:2] - SWEEP_GOAL)) <= SWEEP_GOAL_RADIUS
    return in_goal and trail_chord_deviation(world, 0) >= _MIN_CURVE_DEV


def _sweep_released(world: WorldState) -> bool:
    if not _sweep_curved_delivery(world):
        return False
    held = any(att.object_id == 0 for att in world.attachments.values())
    return not held and world.right.pose.position[2] >= 0.12


# ----------------------------------------------------------------- push-box

PUSH_GOAL = np.array([0.68, 0.10])
PUSH_GOAL_RADIUS = 0.05
BOX_HALF = (0.04, 0.04, 0.04)


def _build_push(rng: np.random.Generator) -> tuple[ObjectState, ...]:
    x = 0.38 + rng.uniform(-0.04, 0.04)
    y = 0.08 + rng.uniform(-0.05, 0.05)
    box = ObjectState(
        object_id=0,
        name="box",
        shape=Box(BOX_HALF),
        pose=Pose.from_xyz(x, y, BOX_HALF[2]),
        attach_points=np.array([[-BOX_HALF[0], 0.0, 0.0]]),
    )
    return (box,)


def _box(world: WorldState) -> ObjectState:
    return world.object_by_id(0)


def _push_contacted(world: WorldState) -> bool:
    return world.was_attached("right", 0)


def _push_delivered(world: WorldState) -> bool:
    pos = _box(world).pose.position
    return float(np.linalg.norm(pos[:2] - PUSH_GOAL)) <= PUSH_GOAL_RADIUS


def _push_grounded(world: WorldState) -> bool:
    if not _push_delivered(world):
        return False
    trail = _trail_positions(world, 0)
    stayed_down = bool(np.all(trail[:, 2] <= BOX_HALF[2] + 0.02))
    held = any(att.object_id == 0 for att in world.attachments.values())
    return stayed_down and not held


# ----------------------------------------------------------------- registry

TASKS: dict[str, TaskSpec] = {
    "lift-bar": TaskSpec(
        task_id="lift-bar",
        language_id=0,
        prompt="bar",
        stage_names=("grasped_both", "lifted", "level_carry", "hold_at_goal"),
        stage_predicates=(_lift_grasped, _lift_lifted, _lift_level_carry, _lift_hold_at_goal),
        loc_stage_index=0,
        step_cap=120,
        build_objects=_build_lift_bar,
    ),
    "handover-insert": TaskSpec(
        task_id="handover-insert",
        language_id=1,
        prompt="plate",
        stage_names=("right_grasped", "handover", "placed", "released"),
        stage_predicates=(_ho_right_grasped, _ho_handover_done, _ho_placed, _ho_released),
        loc_stage_index=0,
        step_cap=220,
        build_objects=_build_handover,
    ),
    "sweep-arc": TaskSpec(
        task_id="sweep-arc",
        language_id=2,
        prompt="puck",
        stage_names=("contacted", "curved_delivery", "released"),
        stage_predicates=(_sweep_contacted, _sweep_curved_delivery, _sweep_released),
        loc_stage_index=0,
        step_cap=160,
        build_objects=_build_sweep,
    ),
    "push-box": TaskSpec(
        task_id="push-box",
        language_id=3,
        prompt="box",
        stage_names=("contacted", "delivered", "grounded_delivery"),
        stage_predicates=(_push_contacted, _push_delivered, _push_grounded),
        loc_stage_index=0,
        step_cap=140,
        build_objects=_build_push,
    ),
}


def get_task(task_id: str) -> TaskSpec:
    try:
        return TASKS[task_id]
    except KeyError:
        raise UnknownTaskError(
            f"unknown task {task_id!r}; available: {sorted(TASKS)}"
        ) from None

"""Open-loop scripted experts producing dense waypoint action sequences.

Waypoints are spaced under the simulator speed caps so execution follows the
script exactly; grasp moments include short dwells so keyframe detection sees
clean turning points.
"""

from __future__ import annotations

import numpy as np

from ..errors import InfeasibleTaskError
from ..geometry import Pose, quat_rotation_angle, quat_multiply, quat_conjugate, quat_slerp
from .sim import V_MAX, OMEGA_MAX
from .tasks import (
    HANDOVER_POSE,
    SLOT_CENTER,
    SWEEP_BULGE,
    SWEEP_GOAL,
    PUSH_GOAL,
    TaskSpec,
    WORKSPACE_HI,
    WORKSPACE_LO,
)
from .types import ArmAction, BimanualAction, WorldState

_STEP_POS = 0.9 * V_MAX
_STEP_ANG = 0.9 * OMEGA_MAX
_FEASIBLE_MARGIN = 0.06


class _Script:
    """Accumulates per-step bimanual actions while tracking commanded state."""

    def __init__(self, world: WorldState):
        self.pose = {"left": world.left.pose, "right": world.right.pose}
        self.open = {"left": world.left.openness, "right": world.right.openness}
        self.actions: list[BimanualAction] = []

    def _emit(self):
        self.actions.append(
            BimanualAction(
                ArmAction(self.pose["left"], self.open["left"]),
                ArmAction(self.pose["right"], self.open["right"]),
            )
        )

    def dwell(self, n: int = 1):
        for _ in range(n):
            self._emit()

    def set_openness(self, side: str, value: float, settle: int = 2):
        self.dwell(settle)
        self.open[side] = value
        self._emit()
        self.dwell(settle)

    def move(self, targets: dict[str, Pose]):
        """Move one or both arms along straight synchronized paths."""
        n = 1
        for side, tgt in targets.items():
            cur = self.pose[side]
            dist = float(np.linalg.norm(tgt.position - cur.position))
            rel = quat_multiply(quat_conjugate(cur.orientation), tgt.orientation)
            ang = quat_rotation_angle(rel)
            n = max(n, int(np.ceil(dist / _STEP_POS)), int(np.ceil(ang / _STEP_ANG)))
        starts = {s: self.pose[s] for s in targets}
        for i in range(1, n + 1):
            f = i / n
            for side, tgt in targets.items():
                cur = starts[side]
                pos = cur.position + f * (tgt.position - cur.position)
                q = quat_slerp(cur.orientation, tgt.orientation, f)
                self.pose[side] = Pose.from_parts(pos, q)
            self._emit()

    def move_along(self, side: str, waypoints: list[Pose]):
        for wp in waypoints:
            self.pose[side] = wp
            self._emit()


def _check_feasible(points: list[np.ndarray], task_id: str):
    lo = WORKSPACE_LO - _FEASIBLE_MARGIN
    hi = WORKSPACE_HI + _FEASIBLE_MARGIN
    for p in points:
        if np.any(p < lo) or np.any(p > hi):
            raise InfeasibleTaskError(
                f"{task_id}: required waypoint {np.round(p, 3)} outside workspace"
            )


def _above(p: np.ndarray, dz: float, orientation=None) -> Pose:
    q = np.array([1.0, 0, 0, 0]) if orientation is None else orientation
    return Pose.from_parts(p + np.array([0.0, 0.0, dz]), q)


def scripted_expert(task: TaskSpec, world: WorldState) -> list[BimanualAction]:
    if task.task_id == "lift-bar":
        return _expert_lift_bar(world)
    if task.task_id == "handover-insert":
        return _expert_handover(world)
    if task.task_id == "sweep-arc":
        return _expert_sweep(world)
    if task.task_id == "push-box":
        return _expert_push(world)
    raise InfeasibleTaskError(f"no expert for task {task.task_id!r}")


def _expert_lift_bar(world: WorldState) -> list[BimanualAction]:
    bar = world.object_by_name("bar")
    ends = bar.attach_points_world()
    left_end, right_end = (ends[0], ends[1]) if ends[0][1] >= ends[1][1] else (ends[1], ends[0])
    _check_feasible([left_end, right_end], "lift-bar")
    q = bar.pose.orientation

    s = _Script(world)
    s.move({"left": _above(left_end, 0.10, q), "right": _above(right_end, 0.10, q)})
    s.move({"left": _above(left_end, 0.0, q), "right": _above(right_end, 0.0, q)})
    s.set_openness("left", 0.0, settle=2)
    s.set_openness("right", 0.0, settle=2)
    lift = 0.22 - left_end[2]
    s.move({"left": _above(left_end, lift, q), "right": _above(right_end, lift, q)})
    s.dwell(3)
    return s.actions


def _expert_handover(world: WorldState) -> list[BimanualAction]:
    plate = world.object_by_name("plate")
    pts = plate.attach_points_world()
    r_home = world.right.pose.position
    ri = int(np.argmin(np.linalg.norm(pts - r_home, axis=1)))
    a_right, a_left_local_idx = pts[ri], 1 - ri
    q = plate.pose.orientation
    center0 = plate.pose.position

    s = _Script(world)
    # right arm: grasp the near edge
    s.move({"right": _above(a_right, 0.08, q)})
    s.move({"right": _above(a_right, 0.0, q)})
    s.set_openness("right", 0.0)
    s.move({"right": _above(a_right, 0.10, q)})

    # carry so the plate center reaches the handover point
    grip_offset = s.pose["right"].position - (center0 + np.array([0.0, 0.0, 0.10]))
    s.move({"right": Pose.from_parts(HANDOVER_POSE + grip_offset, q)})

    # left arm: take the opposite edge at the handover pose
    b_world = HANDOVER_POSE + plate.pose.rotation_matrix() @ plate.attach_points[a_left_local_idx]
    _check_feasible([a_right, b_world], "handover-insert")
    s.move({"left": _above(b_world, 0.08, q)})
    s.move({"left": _above(b_world, 0.0, q)})
    s.set_openness("left", 0.0)  # binding transfers to the left gripper
    s.set_openness("right", 1.0)
    s.move({"right": Pose.from_xyz(0.55, -0.20, 0.25)})

    # left arm: place the plate onto the tray slot
    left_offset = s.pose["left"].position - HANDOVER_POSE
    above_slot = SLOT_CENTER + np.array([0.0, 0.0, 0.10])
    s.move({"left": Pose.from_parts(above_slot + left_offset, q)})
    s.move({"left": Pose.from_parts(SLOT_CENTER + left_offset, q)})
    s.set_openness("left", 1.0)
    s.move({"left": Pose.from_parts(above_slot + left_offset, q)})
    s.move({"left": Pose.from_xyz(0.40, 0.24, 0.25)})
    s.dwell(2)
    return s.actions


def _bezier_arc(start_xy: np.ndarray, goal_xy: np.ndarray, bulge: float, z: float) -> list[np.ndarray]:
    chord = goal_xy - start_xy
    n_chord = float(np.linalg.norm(chord))
    d = chord / n_chord
    perp = np.array([d[1], -d[0]])
    ctrl = (start_xy + goal_xy) / 2.0 + 2.0 * bulge * perp
    # quadratic Bezier, sampled finely enough to stay under the speed cap
    approx_len = n_chord + 2.0 * bulge
    n = max(8, int(np.ceil(approx_len / (0.8 * V_MAX))))
    out = []
    for i in range(1, n + 1):
        t = i / n
        xy = (1 - t) ** 2 * start_xy + 2 * (1 - t) * t * ctrl + t**2 * goal_xy
        out.append(np.array([xy[0], xy[1], z]))
    return out


def _expert_sweep(world: WorldState) -> list[BimanualAction]:
    puck = world.object_by_name("puck")
    top = puck.attach_points_world()[0]
    goal = np.array([SWEEP_GOAL[0], SWEEP_GOAL[1], top[2]])
    _check_feasible([top, goal], "sweep-arc")

    s = _Script(world)
    s.move({"right": _above(top, 0.08)})
    s.move({"right": _above(top, 0.0)})
    s.set_openness("right", 0.0)
    arc = _bezier_arc(top[:2], goal[:2], SWEEP_BULGE, top[2])
    s.move_along("right", [Pose.from_parts(p, np.array([1.0, 0, 0, 0])) for p in arc])
    s.set_openness("right", 1.0)
    s.move({"right": _above(goal, 0.15)})
    s.dwell(2)
    return s.actions


def _expert_push(world: WorldState) -> list[BimanualAction]:
    box = world.object_by_name("box")
    contact = box.attach_points_world()[0]
    center = box.pose.position
    goal = np.array([PUSH_GOAL[0], PUSH_GOAL[1], center[2]])
    offset = contact - center
    end = goal + offset
    _check_feasible([contact, end], "push-box")

    s = _Script(world)
    s.move({"right": _above(contact, 0.10)})
    s.move({"right": _above(contact, 0.0)})
    s.set_openness("right", 0.0)
    s.move({"right": Pose.from_parts(end, np.array([1.0, 0, 0, 0]))})
    s.set_openness("right", 1.0)
    s.move({"right": _above(end, 0.15)})
    s.dwell(2)
    return s.actions

import numpy as np
import pytest

from keyflow.errors import InvalidArgumentError, UnknownTaskError
from keyflow.geometry import Pose, pose_compose, quat_from_axis_angle, relative_transform
from keyflow.world import (
    ArmAction,
    BimanualAction,
    Camera,
    GripperState,
    ObjectState,
    Sphere,
    Box,
    V_MAX,
    ViewObservation,
    WorldState,
    WORKSPACE_HI,
    WORKSPACE_LO,
    default_camera_rig,
    get_task,
    make_world,
    normalized_score,
    render,
    score,
    scripted_expert,
    step,
)

ALL_TASKS = ["lift-bar", "handover-insert", "sweep-arc", "push-box"]


def hold_action(world: WorldState) -> BimanualAction:
    return BimanualAction(
        ArmAction(world.left.pose, world.left.openness),
        ArmAction(world.right.pose, world.right.openness),
    )


def run_expert(task_id: str, seed: int):
    task = get_task(task_id)
    world = make_world(task, seed)
    actions = scripted_expert(task, world)
    for a in actions:
        world = step(world, a)
    return task, world, actions


# ------------------------------------------------------------- make_world


def test_make_world_deterministic():
    task = get_task("lift-bar")
    a, b = make_world(task, 0), make_world(task, 0)
    for oa, ob in zip(a.objects, b.objects):
        np.testing.assert_array_equal(oa.pose.position, ob.pose.position)
        np.testing.assert_array_equal(oa.pose.orientation, ob.pose.orientation)


@pytest.mark.parametrize("task_id", ALL_TASKS)
def test_make_world_inside_workspace(task_id):
    task = get_task(task_id)
    for seed in range(100):
        world = make_world(task, seed)
        for obj in world.objects:
            assert np.all(obj.pose.position >= WORKSPACE_LO - 1e-9)
            assert np.all(obj.pose.position <= WORKSPACE_HI + 1e-9)


def test_make_world_seed7_golden():
    # regenerated by the documented seeded sampler; frozen here as a regression
    world = make_world(get_task("lift-bar"), 7)
    bar = world.object_by_id(0)
    np.testing.assert_allclose(
        bar.pose.position, [0.47835450329890183, 0.07901659962793496, 0.02], atol=1e-12
    )
    np.testing.assert_allclose(
        bar.pose.orientation, [0.9970549071220375, 0.0, 0.0, 0.076691017621787], atol=1e-12
    )


def test_unknown_task_rejected():
    with pytest.raises(UnknownTaskError):
        get_task("juggle")


# ------------------------------------------------------------------- step


def test_step_zero_displacement_only_advances_time():
    world = make_world(get_task("lift-bar"), 0)
    nxt = step(world, hold_action(world))
    assert nxt.time == world.time + 1
    assert nxt.attachments == dict(world.attachments)
    assert nxt.events == world.events
    np.testing.assert_array_equal(nxt.left.pose.position, world.left.pose.position)
    np.testing.assert_array_equal(nxt.right.pose.position, world.right.pose.position)
    for oa, ob in zip(world.objects, nxt.objects):
        np.testing.assert_array_equal(oa.pose.position, ob.pose.position)
    assert {k: len(v) for k, v in nxt.trails.items()} == {
        k: len(v) for k, v in world.trails.items()
    }


def test_step_clamps_linear_speed():
    world = make_world(get_task("lift-bar"), 0)
    target = Pose.from_parts(
        world.left.pose.position + np.array([1.0, 0.0, 0.0]), world.left.pose.orientation
    )
    act = BimanualAction(
        ArmAction(target, world.left.openness),
        ArmAction(world.right.pose, world.right.openness),
    )
    nxt = step(world, act)
    delta = nxt.left.pose.position - world.left.pose.position
    np.testing.assert_allclose(delta, [V_MAX, 0.0, 0.0], atol=1e-12)


def test_step_is_deterministic():
    world = make_world(get_task("sweep-arc"), 3)
    act = scripted_expert(get_task("sweep-arc"), world)[0]
    a, b = step(world, act), step(world, act)
    np.testing.assert_array_equal(a.right.pose.position, b.right.pose.position)
    np.testing.assert_array_equal(a.right.pose.orientation, b.right.pose.orientation)


def test_step_rejects_non_finite_action():
    world = make_world(get_task("lift-bar"), 0)
    with pytest.raises(InvalidArgumentError):
        BimanualAction.from_vector(np.full(16, np.nan))
    with pytest.raises(InvalidArgumentError):
        step(world, BimanualAction(
            ArmAction(world.left.pose, float("nan")),
            ArmAction(world.right.pose, 1.0),
        ))


def test_grasp_then_translate_follows_rigidly():
    task = get_task("push-box")
    world = make_world(task, 1)
    box = world.object_by_id(0)
    contact = box.attach_points_world()[0]

    # teleport-style approach within speed cap using the scripted path
    world_after = world
    for act in scripted_expert(task, world)[:60]:
        world_after = step(world_after, act)
        if "right" in world_after.attachments:
            break
    assert "right" in world_after.attachments

    grip0 = world_after.right.pose
    obj0 = world_after.object_by_id(0).pose
    # drag the gripper somewhere else and check the rigid-follow oracle
    target = Pose.from_parts(grip0.position + np.array([0.04, 0.02, 0.03]), grip0.orientation)
    moved = step(
        world_after,
        BimanualAction(
            ArmAction(world_after.left.pose, world_after.left.openness),
            ArmAction(target, 0.0),
        ),
    )
    grip1 = moved.right.pose
    expected = pose_compose(relative_transform(grip0, grip1), obj0)
    got = moved.object_by_id(0).pose
    np.testing.assert_allclose(got.position, expected.position, atol=1e-9)
    np.testing.assert_allclose(got.orientation, expected.orientation, atol=1e-9)


def test_attached_relative_pose_preserved_across_steps():
    task, world, actions = None, None, None
    task = get_task("sweep-arc")
    world = make_world(task, 0)
    rels = []
    for act in scripted_expert(task, world):
        world = step(world, act)
        att = world.attachments.get("right")
        if att is not None:
            rel_now = pose_compose(
                relative_transform(world.right.pose, Pose.identity()),
                world.object_by_id(0).pose,
            )
            rels.append((att.relative, rel_now))
    assert rels
    for stored, observed in rels:
        np.testing.assert_allclose(observed.position, stored.position, atol=1e-9)
        np.testing.assert_allclose(observed.orientation, stored.orientation, atol=1e-9)


# ----------------------------------------------------------------- render


def empty_world() -> WorldState:
    return WorldState(
        GripperState(Pose.from_xyz(0, 1, 1), 1.0),
        GripperState(Pose.from_xyz(0, -1, 1), 1.0),
        (),
        {},
        (),
        {},
        0,
    )


def test_render_requires_camera():
    with pytest.raises(InvalidArgumentError):
        render(empty_world(), [])


def test_render_empty_world_is_blank():
    view = render(empty_world(), default_camera_rig())[0]
    assert not view.depth.any()
    assert not view.feature_map.any()
    assert (view.object_ids == -1).all()


def test_render_sphere_depth_oracle():
    cam = Camera.look_at(eye=(0, 0, 0), target=(1, 0, 0))
    sphere = ObjectState(0, "ball", Sphere(0.05), Pose.from_xyz(1.0, 0, 0), np.zeros((1, 3)))
    world = WorldState(
        GripperState(Pose.from_xyz(0, 2, 2), 1.0),
        GripperState(Pose.from_xyz(0, -2, 2), 1.0),
        (sphere,),
        {},
        (),
        {},
        0,
    )
    view = render(world, [cam])[0]
    d = view.depth[int(cam.cy), int(cam.cx)]
    assert abs(d - 0.95) <= 0.01  # within one surfel spacing


def test_render_occlusion_nearer_wins():
    cam = Camera.look_at(eye=(0, 0, 0), target=(1, 0, 0))
    near = ObjectState(0, "near", Box((0.05, 0.05, 0.05)), Pose.from_xyz(0.8, 0, 0), np.zeros((1, 3)))
    far = ObjectState(1, "far", Box((0.05, 0.05, 0.05)), Pose.from_xyz(1.6, 0, 0), np.zeros((1, 3)))
    world = WorldState(
        GripperState(Pose.from_xyz(0, 2, 2), 1.0),
        GripperState(Pose.from_xyz(0, -2, 2), 1.0),
        (near, far),
        {},
        (),
        {},
        0,
    )
    view = render(world, [cam])[0]
    center_id = view.object_ids[int(cam.cy), int(cam.cx)]
    assert center_id == 0
    covered = view.depth[view.object_ids == 0]
    assert covered.max() < 0.8  # every ray hitting the near box stops short of 0.8 m


def test_render_depth_nonnegative_and_min_consistent():
    world = make_world(get_task("handover-insert"), 2)
    for view in render(world, default_camera_rig()):
        assert (view.depth >= 0).all()
        hit = view.object_ids >= 0
        assert (view.depth[hit] > 0).all()
        assert not view.depth[~hit].any()


# ----------------------------------------------------------------- expert


@pytest.mark.parametrize("task_id", ALL_TASKS)
@pytest.mark.parametrize("seed", [0, 5, 11])
def test_expert_reaches_success(task_id, seed):
    task, world, _ = run_expert(task_id, seed)
    result = score(task, world)
    assert result.success
    assert result.stages_done == task.n_stages
    assert result.loc_success


def test_expert_lift_bar_keeps_grippers_level():
    task = get_task("lift-bar")
    world = make_world(task, 4)
    actions = scripted_expert(task, world)
    for act in actions:
        dz = abs(act.left.pose.position[2] - act.right.pose.position[2])
        assert dz <= 0.01


def test_expert_sweep_arc_is_curved():
    task = get_task("sweep-arc")
    world = make_world(task, 9)
    actions = scripted_expert(task, world)
    pts = np.array([a.right.pose.position for a in actions])
    # waypoints between grasp and release: measure deviation from the chord
    a, b = pts[0], pts[-1]
    moving = pts
    chord = b - a
    chord = chord / np.linalg.norm(chord)
    dev = np.linalg.norm(np.cross(moving - a, chord), axis=1)
    assert dev.max() > 0.05


def test_expert_handover_toggle_counts():
    task = get_task("handover-insert")
    world = make_world(task, 3)
    actions = scripted_expert(task, world)
    for side in ("left", "right"):
        trace = np.array(
            [getattr(a, side).openness for a in actions]
        )
        toggles = int(np.sum(np.abs(np.diff((trace >= 0.5).astype(int))) > 0))
        assert toggles >= 2


# ------------------------------------------------------------------ score


def test_score_fresh_world_is_zero():
    task = get_task("lift-bar")
    world = make_world(task, 0)
    assert score(task, world) == (False, 0, False)


def test_score_normalization_examples():
    task = get_task("lift-bar")  # 4 stages
    assert normalized_score(task, 2) == pytest.approx(5.0)
    assert normalized_score(task, 4) == pytest.approx(10.0)
    sweep = get_task("sweep-arc")  # 3 stages
    assert normalized_score(sweep, 3) == pytest.approx(10.0)

"""Episode container, deterministic generation, and the on-disk format.

One directory per episode: `meta.json` carries ids, seeds, camera parameters,
and an array manifest (name -> dtype/shape/file); each array lives in its own
raw little-endian binary file. Feature maps are not stored: they are repainted
from the per-view object-id maps and the per-object signature table, which
round-trips bit-exactly and avoids duplicating H x W x D data.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import (
    CorruptChunkError,
    InfeasibleTaskError,
    InvalidArgumentError,
    MissingFieldError,
    VersionMismatchError,
)
from ..geometry import Pose
from ..world import (
    Camera,
    TaskSpec,
    ViewObservation,
    WorldState,
    make_world,
    default_camera_rig,
    render,
    score,
    scripted_expert,
    step,
)
from ..world.types import FEATURE_DIM, object_signature

FORMAT_VERSION = 1


@dataclass
class Episode:
    task_id: str
    language_id: int
    seed: int
    robot_states: np.ndarray  # (T, 2, 8) float64: [left, right] x (pos, quat, open)
    actions: np.ndarray  # (T, 16) float64
    object_ids: tuple[int, ...]
    object_names: tuple[str, ...]
    object_poses: np.ndarray  # (T, n_obj, 7) float64
    cameras: list[Camera]
    depth: np.ndarray  # (T, K, H, W) float32
    point_map: np.ndarray  # (T, K, H, W, 3) float32
    view_object_ids: np.ndarray  # (T, K, H, W) int32
    signatures: np.ndarray  # (n_obj, D) float32

    def __post_init__(self):
        if self.n_steps < 2:
            raise InvalidArgumentError("episode must contain at least 2 steps")
        quat_norms = np.linalg.norm(self.robot_states[:, :, 3:7], axis=-1)
        if not np.allclose(quat_norms, 1.0, atol=1e-6):
            raise InvalidArgumentError("robot state quaternions must be unit norm")

    @property
    def n_steps(self) -> int:
        return self.robot_states.shape[0]

    @property
    def n_cameras(self) -> int:
        return len(self.cameras)

    @property
    def feature_dim(self) -> int:
        return self.signatures.shape[1]

    def views_at(self, t: int) -> list[ViewObservation]:
        """Materialize the K view observations for step t."""
        out = []
        for k, cam in enumerate(self.cameras):
            ids = self.view_object_ids[t, k]
            fmap = np.zeros((*ids.shape, self.feature_dim), dtype=np.float32)
            for row, oid in enumerate(self.object_ids):
                mask = ids == oid
                if mask.any():
                    fmap[mask] = self.signatures[row]
            out.append(
                ViewObservation(
                    depth=self.depth[t, k],
                    feature_map=fmap,
                    camera=cam,
                    object_ids=ids,
                    point_map=self.point_map[t, k],
                )
            )
        return out

    def object_pose(self, t: int, object_id: int) -> Pose:
        row = self.object_ids.index(object_id)
        return Pose.from_vector(self.object_poses[t, row])


def _gripper_state_vector(world: WorldState, side: str) -> np.ndarray:
    g = world.gripper(side)
    return np.concatenate([g.pose.as_vector(), [g.openness]])


def generate_episode(
    task: TaskSpec,
    seed: int,
    cameras: list[Camera] | None = None,
    feature_dim: int = FEATURE_DIM,
) -> Episode:
    """Roll the scripted expert and record states, actions, poses, and views."""
    cams = list(cameras) if cameras is not None else default_camera_rig()
    world = make_world(task, seed)
    actions = scripted_expert(task, world)

    obj_ids = tuple(o.object_id for o in world.objects)
    obj_names = tuple(o.name for o in world.objects)

    robot_states, action_rows, pose_rows = [], [], []
    depths, pmaps, idmaps = [], [], []
    for action in actions:
        robot_states.append(
            np.stack(
                [_gripper_state_vector(world, "left"), _gripper_state_vector(world, "right")]
            )
        )
        action_rows.append(action.as_vector())
        pose_rows.append(
            np.stack([world.object_by_id(oid).pose.as_vector() for oid in obj_ids])
        )
        views = render(world, cams, feature_dim=feature_dim)
        depths.append(np.stack([v.depth for v in views]))
        pmaps.append(np.stack([v.point_map for v in views]))
        idmaps.append(np.stack([v.object_ids for v in views]))
        world = step(world, action)

    if not score(task, world).success:
        raise InfeasibleTaskError(
            f"expert failed to reach success on {task.task_id} seed {seed}"
        )

    return Episode(
        task_id=task.task_id,
        language_id=task.language_id,
        seed=seed,
        robot_states=np.stack(robot_states),
        actions=np.stack(action_rows),
        object_ids=obj_ids,
        object_names=obj_names,
        object_poses=np.stack(pose_rows),
        cameras=cams,
        depth=np.stack(depths),
        point_map=np.stack(pmaps),
        view_object_ids=np.stack(idmaps),
        signatures=np.stack([object_signature(oid, feature_dim) for oid in obj_ids]),
    )


# --------------------------------------------------------------- on disk

_ARRAY_FIELDS = (
    "robot_states",
    "actions",
    "object_poses",
    "depth",
    "point_map",
    "view_object_ids",
    "signatures",
)


def _camera_to_json(cam: Camera) -> dict:
    return {
        "fx": cam.fx,
        "fy": cam.fy,
        "cx": cam.cx,
        "cy": cam.cy,
        "width": cam.width,
        "height": cam.height,
        "extrinsics": cam.extrinsics.as_vector().tolist(),
    }


def _camera_from_json(d: dict) -> Camera:
    return Camera(
        fx=d["fx"],
        fy=d["fy"],
        cx=d["cx"],
        cy=d["cy"],
        width=d["width"],
        height=d["height"],
        extrinsics=Pose.from_vector(np.asarray(d["extrinsics"])),
    )


def write_episode(episode: Episode, path: str | Path) -> None:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    manifest = {}
    for name in _ARRAY_FIELDS:
        arr = np.ascontiguousarray(getattr(episode, name))
        fname = f"{name}.bin"
        arr.astype(arr.dtype.newbyteorder("<")).tofile(path / fname)
        manifest[name] = {
            "dtype": arr.dtype.name,
            "shape": list(arr.shape),
            "file": fname,
        }
    meta = {
        "format_version": FORMAT_VERSION,
        "task_id": episode.task_id,
        "language_id": episode.language_id,
        "seed": episode.seed,
        "n_steps": episode.n_steps,
        "object_ids": list(episode.object_ids),
        "object_names": list(episode.object_names),
        "cameras": [_camera_to_json(c) for c in episode.cameras],
        "arrays": manifest,
    }
    (path / "meta.json").write_text(json.dumps(meta, indent=2))


def _load_array(path: Path, spec: dict) -> np.ndarray:
    f = path / spec["file"]
    if not f.exists():
        raise MissingFieldError(f"array file {spec['file']} is missing")
    dtype = np.dtype(spec["dtype"]).newbyteorder("<")
    shape = tuple(spec["shape"])
    expected = int(np.prod(shape)) * dtype.itemsize
    actual = f.stat().st_size
    if actual != expected:
        raise CorruptChunkError(
            f"{spec['file']}: expected {expected} bytes, found {actual}"
        )
    return np.fromfile(f, dtype=dtype).reshape(shape)


def read_episode(path: str | Path) -> Episode:
    path = Path(path)
    meta_file = path / "meta.json"
    if not meta_file.exists():
        raise MissingFieldError(f"{path} has no meta.json")
    try:
        meta = json.loads(meta_file.read_text())
    except json.JSONDecodeError as exc:
        raise CorruptChunkError(f"meta.json is not valid JSON: {exc}") from exc

    version = meta.get("format_version")
    if version != FORMAT_VERSION:
        raise VersionMismatchError(
            f"episode format version {version}, expected {FORMAT_VERSION}"
        )
    for key in ("task_id", "language_id", "seed", "object_ids", "cameras", "arrays"):
        if key not in meta:
            raise MissingFieldError(f"meta.json missing field {key!r}")

    arrays = {}
    for name in _ARRAY_FIELDS:
        if name not in meta["arrays"]:
            raise MissingFieldError(f"array manifest missing {name!r}")
        arrays[name] = _load_array(path, meta["arrays"][name])

    return Episode(
        task_id=meta["task_id"],
        language_id=meta["language_id"],
        seed=meta["seed"],
        object_ids=tuple(meta["object_ids"]),
        object_names=tuple(meta["object_names"]),
        cameras=[_camera_from_json(c) for c in meta["cameras"]],
        **arrays,
    )


def episodes_equal(a: Episode, b: Episode) -> bool:
    """Bit-exact structural equality over metadata and every array."""
    if (a.task_id, a.language_id, a.seed, a.object_ids, a.object_names) != (
        b.task_id,
        b.language_id,
        b.seed,
        b.object_ids,
        b.object_names,
    ):
        return False
    if [_camera_to_json(c) for c in a.cameras] != [_camera_to_json(c) for c in b.cameras]:
        return False
    return all(
        np.array_equal(getattr(a, name), getattr(b, name)) for name in _ARRAY_FIELDS
    )

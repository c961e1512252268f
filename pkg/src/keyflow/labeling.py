"""Interface ground truth: keyframes, keypose labels, query points, pointflow.

The keyframe rule marks a step when (a) either gripper's openness jumps, or
(b) both end effectors dwell after the preceding window was moving, or (c) it
is the final step. Query points are sampled once per episode from a single
designated camera and reused for every training item.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data.episode import Episode
from .errors import EmptyMaskError, MaskServiceUnavailableError, UnknownObjectError
from .geometry import Pose, relative_transform, transform_array
from .world import ViewObservation


@dataclass(frozen=True)
class KeyframeConfig:
    theta_open: float = 0.5  # openness jump threshold (binary grippers)
    theta_vel: float = 1e-3  # m/step dwell threshold
    window: int = 5  # steps of preceding motion required for a dwell keyframe
    gap_min: int = 2  # minimum spacing; earliest of a run is kept


@dataclass(frozen=True)
class LabelConfig:
    n_q: int = 200
    keyframes: KeyframeConfig = KeyframeConfig()
    seed_salt: int = 90210


@dataclass(frozen=True)
class LabelSet:
    keyframe_steps: tuple[int, ...]
    query_points: np.ndarray  # (N_q, 3) world frame at step 0
    query_object_id: int
    query_camera_index: int
    pointflow: np.ndarray  # (n_keyframes, N_q, 3) aligned with keyframe_steps

    def pointflow_at(self, keyframe_step: int) -> np.ndarray:
        return self.pointflow[self.keyframe_steps.index(keyframe_step)]


# ------------------------------------------------------------- keyframes


def detect_keyframes(episode: Episode, cfg: KeyframeConfig | None = None) -> list[int]:
    cfg = cfg or KeyframeConfig()
    openness = episode.robot_states[:, :, 7]  # (T, 2)
    positions = episode.robot_states[:, :, :3]  # (T, 2, 3)
    return detect_keyframes_from_traces(openness, positions, cfg)


def detect_keyframes_from_traces(
    openness: np.ndarray, positions: np.ndarray, cfg: KeyframeConfig | None = None
) -> list[int]:
    """Rule evaluation over raw (T, 2) openness and (T, 2, 3) position traces."""
    cfg = cfg or KeyframeConfig()
    t_total = openness.shape[0]
    last = t_total - 1

    speed = np.zeros(t_total)
    if t_total > 1:
        per_arm = np.linalg.norm(np.diff(positions, axis=0), axis=-1)  # (T-1, 2)
        speed[1:] = per_arm.max(axis=1)

    hits = []
    for t in range(1, t_total):
        openness_jump = bool(np.any(np.abs(openness[t] - openness[t - 1]) > cfg.theta_open))
        dwell = False
        if t >= cfg.window + 1:
            window_mean = float(speed[t - cfg.window : t].mean())
            dwell = speed[t] < cfg.theta_vel and window_mean > 2 * cfg.theta_vel
        if openness_jump or dwell:
            hits.append(t)

    kept: list[int] = []
    for t in hits:
        if not kept or t - kept[-1] >= cfg.gap_min:
            kept.append(t)
    if last not in kept:
        kept.append(last)
    return sorted(set(kept))


# ----------------------------------------------------------------- masks


@dataclass(frozen=True)
class ObjectMask:
    camera_index: int
    mask: np.ndarray  # (H, W) bool


class SyntheticMaskBackend:
    """Exact ground-truth masks from the renderer's object-id buffers."""

    def __init__(self, registry: dict[str, int]):
        self.registry = dict(registry)

    def __call__(self, views: list[ViewObservation], prompt: str) -> ObjectMask:
        if prompt not in self.registry:
            raise UnknownObjectError(
                f"unknown object {prompt!r}; known: {sorted(self.registry)}"
            )
        oid = self.registry[prompt]
        coverage = [int((v.object_ids == oid).sum()) for v in views]
        cam = int(np.argmax(coverage))
        if coverage[cam] == 0:
            raise EmptyMaskError(f"object {prompt!r} is not visible from any camera")
        return ObjectMask(cam, views[cam].object_ids == oid)


class ExternalMaskClient:
    """Client contract for a grounding + segmentation service.

    Request (JSON): {"image_png_b64": str, "prompt": str, "width": int,
    "height": int}. Response (JSON): {"rle": list[int], "width": int,
    "height": int} where `rle` is run-length encoding of the row-major mask
    starting with the count of zeros. Disabled by default: this package ships
    the contract and the synthetic backend only.
    """

    def __init__(self, endpoint: str | None = None):
        self.endpoint = endpoint

    @staticmethod
    def encode_request(image_png_b64: str, prompt: str, width: int, height: int) -> dict:
        return {
            "image_png_b64": image_png_b64,
            "prompt": prompt,
            "width": width,
            "height": height,
        }

    @staticmethod
    def decode_response(payload: dict) -> np.ndarray:
        flat = rle_decode(payload["rle"], payload["width"] * payload["height"])
        return flat.reshape(payload["height"], payload["width"])

    def __call__(self, views: list[ViewObservation], prompt: str) -> ObjectMask:
        raise MaskServiceUnavailableError(
            "external mask service is a documented contract; no backend is bundled"
            + (f" (endpoint {self.endpoint!r})" if self.endpoint else "")
        )


def rle_encode(mask: np.ndarray) -> list[int]:
    """Row-major run lengths, starting with the leading zero run (may be 0)."""
    flat = np.asarray(mask, dtype=bool).ravel()
    runs = []
    current, count = False, 0
    for v in flat:
        if v == current:
            count += 1
        else:
            runs.append(count)
            current, count = v, 1
    runs.append(count)
    return runs


def rle_decode(runs: list[int], n: int) -> np.ndarray:
    out = np.zeros(n, dtype=bool)
    pos, val = 0, False
    for r in runs:
        if val:
            out[pos : pos + r] = True
        pos += r
        val = not val
    return out


def detect_object_mask(
    views: list[ViewObservation],
    prompt: str,
    registry: dict[str, int],
    backend=None,
) -> ObjectMask:
    backend = backend or SyntheticMaskBackend(registry)
    return backend(views, prompt)


# ---------------------------------------------------------- query points


def sample_query_points(
    view: ViewObservation, mask: np.ndarray, n_q: int, seed: int
) -> np.ndarray:
    """Back-project N_q masked pixels to world points (replacement iff scarce).

    Uses the renderer's subpixel-exact geometry buffer, so sampled points lie
    on the object surface rather than on quantized pixel-center rays.
    """
    valid = np.asarray(mask, dtype=bool) & (view.depth > 0)
    rows, cols = np.nonzero(valid)
    if rows.size == 0:
        raise EmptyMaskError("mask covers no valid-depth pixels")
    rng = np.random.default_rng(seed)
    idx = rng.choice(rows.size, size=n_q, replace=rows.size < n_q)
    return view.point_map[rows[idx], cols[idx]].astype(np.float64)


# ------------------------------------------------------------- pointflow


def pointflow_labels(
    query_points: np.ndarray, pose_at_step0: Pose, poses_at_keyframes: list[Pose]
) -> np.ndarray:
    """Future query-point positions via object-frame round trips."""
    rows = [
        transform_array(relative_transform(pose_at_step0, pose_k), query_points)
        for pose_k in poses_at_keyframes
    ]
    return np.stack(rows) if rows else np.zeros((0, *query_points.shape))


# ---------------------------------------------------------- per episode


def label_episode(
    episode: Episode,
    query_object: str,
    cfg: LabelConfig | None = None,
    backend=None,
) -> LabelSet:
    cfg = cfg or LabelConfig()
    keyframes = detect_keyframes(episode, cfg.keyframes)

    registry = dict(zip(episode.object_names, episode.object_ids))
    views0 = episode.views_at(0)
    obj_mask = detect_object_mask(views0, query_object, registry, backend)
    seed = int(np.random.default_rng([cfg.seed_salt, episode.seed]).integers(2**31))
    f0 = sample_query_points(views0[obj_mask.camera_index], obj_mask.mask, cfg.n_q, seed)

    oid = registry[query_object]
    pose0 = episode.object_pose(0, oid)
    flows = pointflow_labels(
        f0, pose0, [episode.object_pose(t, oid) for t in keyframes]
    )
    return LabelSet(
        keyframe_steps=tuple(keyframes),
        query_points=f0,
        query_object_id=oid,
        query_camera_index=obj_mask.camera_index,
        pointflow=flows,
    )


# ------------------------------------------------------------------- io

_LABELS_FILE = "labels.json"


def write_labels(labels: LabelSet, episode_dir: str | Path) -> None:
    path = Path(episode_dir)
    labels.query_points.astype("<f8").tofile(path / "query_points.bin")
    labels.pointflow.astype("<f8").tofile(path / "pointflow.bin")
    meta = {
        "version": 1,
        "keyframe_steps": list(labels.keyframe_steps),
        "query_object_id": labels.query_object_id,
        "query_camera_index": labels.query_camera_index,
        "n_q": int(labels.query_points.shape[0]),
    }
    (path / _LABELS_FILE).write_text(json.dumps(meta, indent=2))


def read_labels(episode_dir: str | Path) -> LabelSet:
    path = Path(episode_dir)
    meta = json.loads((path / _LABELS_FILE).read_text())
    n_q = meta["n_q"]
    n_kf = len(meta["keyframe_steps"])
    f0 = np.fromfile(path / "query_points.bin", dtype="<f8").reshape(n_q, 3)
    flows = np.fromfile(path / "pointflow.bin", dtype="<f8").reshape(n_kf, n_q, 3)
    return LabelSet(
        keyframe_steps=tuple(meta["keyframe_steps"]),
        query_points=f0,
        query_object_id=meta["query_object_id"],
        query_camera_index=meta["query_camera_index"],
        pointflow=flows,
    )


def has_labels(episode_dir: str | Path) -> bool:
    return (Path(episode_dir) / _LABELS_FILE).exists()

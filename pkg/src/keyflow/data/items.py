"""Supervised item assembly: observation window -> label tuple."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidArgumentError, MissingFieldError
from ..geometry import PointSet
from ..labeling import LabelSet
from ..perception import SemanticField, crop_and_fps, fuse_semantic_features
from ..world import WORKSPACE_HI, WORKSPACE_LO
from .episode import Episode
from .normalizer import Normalizer

_FPS_SALT = 51423


@dataclass(frozen=True)
class ItemConfig:
    h_c: int = 50  # continuous action horizon
    h_k: int = 4  # keyframe horizon
    h_prop: int = 2  # proprioception history steps
    n_s: int = 512  # semantic field budget
    crop_lo: tuple[float, float, float] = tuple(WORKSPACE_LO)
    crop_hi: tuple[float, float, float] = tuple(WORKSPACE_HI)
    sigma: float = 0.01
    tau_occl: float = 0.005


@dataclass(frozen=True)
class TrainingItem:
    scene_field: SemanticField
    proprio: np.ndarray  # (h_prop, 2, 8), normalized per arm
    language_id: int
    query_points: np.ndarray  # (N_q, 3) world meters
    continuous_target: np.ndarray  # (h_c, 16), normalized
    keypose_target: np.ndarray  # (h_k, 16), normalized
    pointflow_target: np.ndarray  # (h_k, N_q, 3) world meters

    def validate_shapes(self, cfg: ItemConfig, n_q: int) -> None:
        checks = {
            "proprio": (self.proprio, (cfg.h_prop, 2, 8)),
            "query_points": (self.query_points, (n_q, 3)),
            "continuous_target": (self.continuous_target, (cfg.h_c, 16)),
            "keypose_target": (self.keypose_target, (cfg.h_k, 16)),
            "pointflow_target": (self.pointflow_target, (cfg.h_k, n_q, 3)),
        }
        for name, (arr, shape) in checks.items():
            if arr.shape != shape:
                raise InvalidArgumentError(f"{name} has shape {arr.shape}, want {shape}")
            if not np.all(np.isfinite(arr)):
                raise InvalidArgumentError(f"{name} contains non-finite values")


def scene_cloud(episode: Episode, t: int) -> PointSet:
    """Merge back-projected depth pixels from all views at step t."""
    pts = []
    for view in episode.views_at(t):
        hit = view.depth > 0
        if hit.any():
            pts.append(view.point_map[hit].astype(np.float64))
    if not pts:
        raise InvalidArgumentError(f"no rendered surface at step {t}")
    return PointSet(np.concatenate(pts))


def build_scene_field(episode: Episode, t: int, cfg: ItemConfig) -> SemanticField:
    cloud = scene_cloud(episode, t)
    seed = int(np.random.default_rng([_FPS_SALT, episode.seed, t]).integers(2**31))
    sampled = crop_and_fps(cloud, cfg.crop_lo, cfg.crop_hi, cfg.n_s, seed)
    return fuse_semantic_features(
        sampled, episode.views_at(t), sigma=cfg.sigma, tau_occl=cfg.tau_occl
    )


def _window_rows(arr: np.ndarray, start: int, count: int, pad_row: np.ndarray) -> np.ndarray:
    rows = arr[start : start + count]
    if rows.shape[0] < count:
        pad = np.repeat(pad_row[None], count - rows.shape[0], axis=0)
        rows = np.concatenate([rows, pad], axis=0)
    return rows


def make_training_item(
    episode: Episode,
    t: int,
    labels: LabelSet,
    normalizer: Normalizer,
    cfg: ItemConfig | None = None,
    scene_field: SemanticField | None = None,
) -> TrainingItem:
    """Assemble one supervised tuple at step t.

    Continuous targets are the next h_c actions padded with the final episode
    action; keypose/pointflow targets cover the next h_k keyframes, padded by
    repeating the last keyframe.
    """
    cfg = cfg or ItemConfig()
    if labels is None:
        raise MissingFieldError("labels must be precomputed for this episode")
    if not 0 <= t < episode.n_steps:
        raise InvalidArgumentError(f"step {t} outside episode of {episode.n_steps}")

    continuous = _window_rows(episode.actions, t, cfg.h_c, episode.actions[-1])

    upcoming = [k for k in labels.keyframe_steps if k > t]
    if not upcoming:
        upcoming = [labels.keyframe_steps[-1]]
    ks = (upcoming + [upcoming[-1]] * cfg.h_k)[: cfg.h_k]
    keypose = np.stack([episode.actions[k] for k in ks])
    pointflow = np.stack([labels.pointflow_at(k) for k in ks])

    first = max(0, t - cfg.h_prop + 1)
    states = episode.robot_states[first : t + 1]
    if states.shape[0] < cfg.h_prop:
        pad = np.repeat(states[:1], cfg.h_prop - states.shape[0], axis=0)
        states = np.concatenate([pad, states], axis=0)
    proprio = np.stack(
        [
            normalizer.normalize_arm(states[:, 0], "left"),
            normalizer.normalize_arm(states[:, 1], "right"),
        ],
        axis=1,
    )

    if scene_field is None:
        scene_field = build_scene_field(episode, t, cfg)

    item = TrainingItem(
        scene_field=scene_field,
        proprio=proprio,
        language_id=episode.language_id,
        query_points=labels.query_points,
        continuous_target=normalizer.normalize(continuous),
        keypose_target=normalizer.normalize(keypose),
        pointflow_target=pointflow,
    )
    item.validate_shapes(cfg, labels.query_points.shape[0])
    return item

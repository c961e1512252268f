"""Per-dimension affine normalization for 16-dim bimanual actions.

Position dims are mapped to [-1, 1] over the corpus min/max with a 5% margin;
quaternion dims are left untouched (unit vectors already live in [-1, 1]);
openness dims use the fixed [0, 1] -> [-1, 1] map. Denoised quaternions are
renormalized at decode time, outside this class.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from ..errors import NormalizationError
from .episode import Episode

ACTION_DIM = 16
POSITION_DIMS = (0, 1, 2, 8, 9, 10)
QUATERNION_DIMS = (3, 4, 5, 6, 11, 12, 13, 14)
OPENNESS_DIMS = (7, 15)
_MARGIN = 1.05


@dataclass(frozen=True)
class Normalizer:
    center: np.ndarray  # (16,)
    half_range: np.ndarray  # (16,)

    def __post_init__(self):
        if np.any(self.half_range <= 0):
            raise NormalizationError("half_range must be strictly positive")

    def normalize(self, actions: np.ndarray) -> np.ndarray:
        return (actions - self.center) / self.half_range

    def denormalize(self, normed: np.ndarray) -> np.ndarray:
        return normed * self.half_range + self.center

    def normalize_arm(self, states: np.ndarray, side: str) -> np.ndarray:
        """Normalize (..., 8) per-arm vectors with that arm's action stats."""
        off = 0 if side == "left" else 8
        return (states - self.center[off : off + 8]) / self.half_range[off : off + 8]

    def denormalize_arm(self, normed: np.ndarray, side: str) -> np.ndarray:
        off = 0 if side == "left" else 8
        return normed * self.half_range[off : off + 8] + self.center[off : off + 8]

    def to_json(self) -> str:
        return json.dumps(
            {
                "version": 1,
                "center": self.center.tolist(),
                "half_range": self.half_range.tolist(),
            },
            sort_keys=True,
        )

    @staticmethod
    def from_json(text: str) -> "Normalizer":
        d = json.loads(text)
        return Normalizer(
            np.asarray(d["center"], dtype=np.float64),
            np.asarray(d["half_range"], dtype=np.float64),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json())

    @staticmethod
    def load(path: str | Path) -> "Normalizer":
        return Normalizer.from_json(Path(path).read_text())

    def fingerprint(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()


def compute_normalizer(episodes: Iterable[Episode]) -> Normalizer:
    actions = [e.actions for e in episodes]
    if not actions:
        raise NormalizationError("cannot fit a normalizer on an empty corpus")
    stacked = np.concatenate(actions, axis=0)

    center = np.zeros(ACTION_DIM)
    half = np.ones(ACTION_DIM)
    for d in POSITION_DIMS:
        lo, hi = float(stacked[:, d].min()), float(stacked[:, d].max())
        if hi - lo <= 0.0:
            raise NormalizationError(f"position dim {d} is constant over the corpus")
        center[d] = (hi + lo) / 2.0
        half[d] = (hi - lo) / 2.0 * _MARGIN
    for d in OPENNESS_DIMS:
        center[d] = 0.5
        half[d] = 0.5
    return Normalizer(center, half)

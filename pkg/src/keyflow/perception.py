"""Semantic field construction and scene-token compression.

A scene cloud is cropped and farthest-point sampled, each surviving point is
re-projected into every view to fuse per-pixel features (depth-distance
weighted, occlusion-gated), and a single set-abstraction level compresses the
field to centroid tokens for the transformer.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
import torch.nn as nn

from .errors import EmptyCropError, InvalidArgumentError
from .geometry import PointSet
from .world import Camera, ViewObservation

SIGMA_DEPTH = 0.01  # m, fusion weight scale
TAU_OCCLUSION = 0.005  # m, occlusion gate


@dataclass(frozen=True)
class SemanticField:
    points: np.ndarray  # (N_s, 3)
    features: np.ndarray  # (N_s, D)

    def __post_init__(self):
        if self.points.shape[0] != self.features.shape[0]:
            raise InvalidArgumentError("points and features must align")
        if not (np.all(np.isfinite(self.points)) and np.all(np.isfinite(self.features))):
            raise InvalidArgumentError("semantic field contains non-finite values")


@dataclass(frozen=True)
class SceneTokens:
    coords: torch.Tensor  # (B, N_tok, 3)
    embeddings: torch.Tensor  # (B, N_tok, d_model)


# -------------------------------------------------------------- sampling


def farthest_point_indices(points: np.ndarray, n: int, start: int) -> np.ndarray:
    """Greedy FPS over (N, 3) points from a fixed start index."""
    count = points.shape[0]
    chosen = np.empty(min(n, count), dtype=np.int64)
    chosen[0] = start % count
    dist = np.linalg.norm(points - points[chosen[0]], axis=1)
    for i in range(1, chosen.size):
        chosen[i] = int(np.argmax(dist))
        dist = np.minimum(dist, np.linalg.norm(points - points[chosen[i]], axis=1))
    return chosen


def crop_and_fps(cloud: PointSet, lo, hi, n_s: int, seed: int) -> PointSet:
    """Crop to an AABB, then FPS to exactly n_s points (cycling if scarce)."""
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    keep = np.all((cloud.points >= lo) & (cloud.points <= hi), axis=1)
    pts = cloud.points[keep]
    feats = cloud.features[keep] if cloud.features is not None else None
    if pts.shape[0] == 0:
        raise EmptyCropError("no points survive the crop bounds")

    rng = np.random.default_rng(seed)
    start = int(rng.integers(pts.shape[0]))
    if pts.shape[0] >= n_s:
        idx = farthest_point_indices(pts, n_s, start)
    else:
        base = farthest_point_indices(pts, pts.shape[0], start)
        reps = int(np.ceil(n_s / pts.shape[0]))
        idx = np.tile(base, reps)[:n_s]
    return PointSet(pts[idx], feats[idx] if feats is not None else None)


# ------------------------------------------------------------ projection


def project_point(cam: Camera, p) -> tuple[float, float, float] | None:
    """Pinhole projection to (u, v, depth); None when the point is behind."""
    p = np.asarray(p, dtype=np.float64)
    p_cam = cam.extrinsics.rotation_matrix() @ p + cam.extrinsics.position
    z = float(p_cam[2])
    if z <= 0.0:
        return None
    return (
        float(cam.fx * p_cam[0] / z + cam.cx),
        float(cam.fy * p_cam[1] / z + cam.cy),
        z,
    )


# ----------------------------------------------------------------- fusion


def fuse_semantic_features(
    points: PointSet,
    views: list[ViewObservation],
    sigma: float = SIGMA_DEPTH,
    tau_occl: float = TAU_OCCLUSION,
) -> SemanticField:
    """Distance-weighted multi-view feature fusion onto the given points."""
    if not views:
        raise InvalidArgumentError("fusion requires at least one view")
    pts = points.points
    n = pts.shape[0]
    dim = views[0].feature_map.shape[-1]
    w_sum = np.zeros(n)
    f_sum = np.zeros((n, dim))

    for view in views:
        cam = view.camera
        p_cam = pts @ cam.extrinsics.rotation_matrix().T + cam.extrinsics.position
        z = p_cam[:, 2]
        valid = z > 1e-9
        u = np.full(n, -1, dtype=np.int64)
        v = np.full(n, -1, dtype=np.int64)
        u[valid] = np.rint(cam.fx * p_cam[valid, 0] / z[valid] + cam.cx).astype(np.int64)
        v[valid] = np.rint(cam.fy * p_cam[valid, 1] / z[valid] + cam.cy).astype(np.int64)
        valid &= (u >= 0) & (u < cam.width) & (v >= 0) & (v < cam.height)

        map_depth = np.zeros(n)
        map_depth[valid] = view.depth[v[valid], u[valid]]
        occluded = z > map_depth + tau_occl
        use = valid & ~occluded
        if not use.any():
            continue
        w = np.exp(-np.abs(z[use] - map_depth[use]) / sigma)
        w_sum[use] += w
        f_sum[use] += w[:, None] * view.feature_map[v[use], u[use]]

    features = np.zeros((n, dim))
    covered = w_sum > 0
    features[covered] = f_sum[covered] / w_sum[covered, None]
    return SemanticField(points=pts, features=features)


# --------------------------------------------------------- set abstraction


def torch_fps(coords: torch.Tensor, n: int, start: int = 0) -> torch.Tensor:
    """Batched FPS indices (B, n) over (B, N, 3) coords, fixed start index."""
    b, count, _ = coords.shape
    idx = torch.empty(b, n, dtype=torch.long, device=coords.device)
    idx[:, 0] = start % count
    dist = torch.linalg.norm(coords - coords[:, start % count : start % count + 1], dim=-1)
    for i in range(1, n):
        nxt = dist.argmax(dim=1)
        idx[:, i] = nxt
        new_d = torch.linalg.norm(coords - coords.gather(1, nxt.view(b, 1, 1).expand(b, 1, 3)), dim=-1)
        dist = torch.minimum(dist, new_d)
    return idx


class SetAbstraction(nn.Module):
    """One grouping level: FPS centroids, ball query, shared MLP, max-pool."""

    def __init__(
        self,
        feature_dim: int,
        d_model: int,
        n_tokens: int,
        radius: float = 0.08,
        k_nn: int = 16,
    ):
        super().__init__()
        self.n_tokens = n_tokens
        self.radius = radius
        self.k_nn = k_nn
        self.mlp = nn.Sequential(
            nn.Linear(3 + feature_dim, d_model),
            nn.ReLU(),
            nn.Linear(d_model, d_model),
        )

    def forward(self, points: torch.Tensor, features: torch.Tensor) -> SceneTokens:
        """points (B, N, 3), features (B, N, D) -> tokens (B, n_tokens, d)."""
        b, count, _ = points.shape
        m = min(self.n_tokens, count)
        centroid_idx = torch_fps(points.detach(), m, start=0)
        if m < self.n_tokens:
            reps = -(-self.n_tokens // m)
            centroid_idx = centroid_idx.repeat(1, reps)[:, : self.n_tokens]
        centroids = points.gather(
            1, centroid_idx.unsqueeze(-1).expand(b, self.n_tokens, 3)
        )

        d = torch.cdist(centroids.detach(), points.detach())  # (B, M, N)
        in_ball = d <= self.radius
        k = min(self.k_nn, count)
        # nearest-first ordering; out-of-ball members pushed to the end
        ranked = d + (~in_ball).to(d.dtype) * 1e6
        nn_dist, nn_idx = ranked.topk(k, dim=-1, largest=False)
        valid = nn_dist < 1e5
        valid[..., 0] = True  # empty ball falls back to the nearest neighbor

        flat_idx = nn_idx.reshape(b, -1)
        grouped_pts = points.gather(1, flat_idx.unsqueeze(-1).expand(b, -1, 3))
        grouped_pts = grouped_pts.reshape(b, self.n_tokens, k, 3) - centroids.unsqueeze(2)
        grouped_feat = features.gather(
            1, flat_idx.unsqueeze(-1).expand(b, -1, features.shape[-1])
        ).reshape(b, self.n_tokens, k, -1)

        h = self.mlp(torch.cat([grouped_pts, grouped_feat], dim=-1))
        h = h.masked_fill(~valid.unsqueeze(-1), float("-inf"))
        pooled = h.max(dim=2).values
        return SceneTokens(coords=centroids, embeddings=pooled)


def encode_scene(field: SemanticField, module: SetAbstraction, dtype=torch.float32) -> SceneTokens:
    """Convenience wrapper: one unbatched field -> tokens with batch dim 1."""
    pts = torch.as_tensor(field.points, dtype=dtype).unsqueeze(0)
    feats = torch.as_tensor(field.features, dtype=dtype).unsqueeze(0)
    return module(pts, feats)

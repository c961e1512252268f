"""Primitive object shapes with deterministic surface sampling.

Surfaces are sampled at a fixed density (1 point / cm^2) on regular grids,
so rendering and geometry checks are reproducible without any RNG.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

SURFEL_SPACING = 0.01  # meters between surface samples (1 point / cm^2)


@dataclass(frozen=True)
class Box:
    half_extents: tuple[float, float, float]

    kind: str = "box"

    def local_aabb(self) -> np.ndarray:
        h = np.asarray(self.half_extents)
        return np.stack([-h, h])


@dataclass(frozen=True)
class Sphere:
    radius: float

    kind: str = "sphere"

    def local_aabb(self) -> np.ndarray:
        r = self.radius
        return np.array([[-r, -r, -r], [r, r, r]])


@dataclass(frozen=True)
class Cylinder:
    radius: float
    height: float  # full height along local z

    kind: str = "cylinder"

    def local_aabb(self) -> np.ndarray:
        r, hh = self.radius, self.height / 2.0
        return np.array([[-r, -r, -hh], [r, r, hh]])


Shape = Box | Sphere | Cylinder


def _face_grid(au: float, av: float, spacing: float) -> tuple[np.ndarray, np.ndarray]:
    nu = max(1, int(round(2 * au / spacing)))
    nv = max(1, int(round(2 * av / spacing)))
    u = (np.arange(nu) + 0.5) / nu * 2 * au - au
    v = (np.arange(nv) + 0.5) / nv * 2 * av - av
    uu, vv = np.meshgrid(u, v, indexing="ij")
    return uu.ravel(), vv.ravel()


def _box_surfels(shape: Box, spacing: float) -> np.ndarray:
    ax, ay, az = shape.half_extents
    pts = []
    for sign in (-1.0, 1.0):
        u, v = _face_grid(ay, az, spacing)  # +/- x faces
        pts.append(np.stack([np.full_like(u, sign * ax), u, v], axis=1))
        u, v = _face_grid(ax, az, spacing)  # +/- y faces
        pts.append(np.stack([u, np.full_like(u, sign * ay), v], axis=1))
        u, v = _face_grid(ax, ay, spacing)  # +/- z faces
        pts.append(np.stack([u, v, np.full_like(u, sign * az)], axis=1))
    return np.concatenate(pts, axis=0)


def _sphere_surfels(shape: Sphere, spacing: float) -> np.ndarray:
    area = 4.0 * np.pi * shape.radius**2
    n = max(16, int(round(area / spacing**2)))
    # Fibonacci sphere: near-uniform, deterministic
    i = np.arange(n)
    z = 1.0 - (2.0 * i + 1.0) / n
    phi = i * np.pi * (3.0 - np.sqrt(5.0))
    r_xy = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
    pts = np.stack([r_xy * np.cos(phi), r_xy * np.sin(phi), z], axis=1)
    return pts * shape.radius


def _cylinder_surfels(shape: Cylinder, spacing: float) -> np.ndarray:
    r, h = shape.radius, shape.height
    pts = []
    n_theta = max(8, int(round(2 * np.pi * r / spacing)))
    theta = (np.arange(n_theta) + 0.5) / n_theta * 2 * np.pi
    n_z = max(1, int(round(h / spacing)))
    z = (np.arange(n_z) + 0.5) / n_z * h - h / 2.0
    tt, zz = np.meshgrid(theta, z, indexing="ij")
    pts.append(
        np.stack([r * np.cos(tt.ravel()), r * np.sin(tt.ravel()), zz.ravel()], axis=1)
    )
    # caps: concentric rings
    n_rings = max(1, int(round(r / spacing)))
    for sign in (-1.0, 1.0):
        for k in range(n_rings):
            rk = (k + 0.5) / n_rings * r
            nk = max(4, int(round(2 * np.pi * rk / spacing)))
            th = (np.arange(nk) + 0.5) / nk * 2 * np.pi
            ring = np.stack(
                [rk * np.cos(th), rk * np.sin(th), np.full(nk, sign * h / 2.0)], axis=1
            )
            pts.append(ring)
    return np.concatenate(pts, axis=0)


@lru_cache(maxsize=64)
def _surfels_cached(shape: Shape, spacing: float) -> np.ndarray:
    if isinstance(shape, Box):
        out = _box_surfels(shape, spacing)
    elif isinstance(shape, Sphere):
        out = _sphere_surfels(shape, spacing)
    elif isinstance(shape, Cylinder):
        out = _cylinder_surfels(shape, spacing)
    else:
        raise TypeError(f"unsupported shape {shape!r}")
    out.setflags(write=False)
    return out


def surface_samples(shape: Shape, spacing: float = SURFEL_SPACING) -> np.ndarray:
    """Local-frame surface points for a shape, cached per (shape, spacing)."""
    return _surfels_cached(shape, spacing)

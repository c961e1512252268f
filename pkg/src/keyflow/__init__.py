"""Keypose + pointflow interface policy for bimanual manipulation, desk scale."""

__version__ = "0.1.0"

from .geometry import Pose, PointSet, pose_compose, pose_inverse, relative_transform, transform_points

__all__ = [
    "Pose",
    "PointSet",
    "pose_compose",
    "pose_inverse",
    "relative_transform",
    "transform_points",
    "__version__",
]

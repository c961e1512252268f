from .shapes import Box, Cylinder, Sphere, surface_samples
from .types import (
    ArmAction,
    AttachEvent,
    Attachment,
    BimanualAction,
    Camera,
    GripperState,
    ObjectState,
    ViewObservation,
    WorldState,
    object_signature,
)
from .sim import OMEGA_MAX, R_GRASP, V_MAX, render, step
from .tasks import (
    TASKS,
    TaskSpec,
    WORKSPACE_HI,
    WORKSPACE_LO,
    default_camera_rig,
    get_task,
    make_world,
    trail_chord_deviation,
)
from .expert import scripted_expert
from .scoring import ScoreResult, normalized_score, score

__all__ = [
    "ArmAction",
    "AttachEvent",
    "Attachment",
    "BimanualAction",
    "Box",
    "Camera",
    "Cylinder",
    "GripperState",
    "ObjectState",
    "OMEGA_MAX",
    "R_GRASP",
    "ScoreResult",
    "Sphere",
    "TASKS",
    "TaskSpec",
    "V_MAX",
    "ViewObservation",
    "WORKSPACE_HI",
    "WORKSPACE_LO",
    "WorldState",
    "default_camera_rig",
    "get_task",
    "make_world",
    "normalized_score",
    "object_signature",
    "render",
    "score",
    "scripted_expert",
    "step",
    "surface_samples",
    "trail_chord_deviation",
]

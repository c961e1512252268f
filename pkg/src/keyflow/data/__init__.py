from .episode import (
    Episode,
    episodes_equal,
    generate_episode,
    read_episode,
    write_episode,
)
from .items import ItemConfig, TrainingItem, build_scene_field, make_training_item, scene_cloud
from .normalizer import Normalizer, compute_normalizer

__all__ = [
    "Episode",
    "ItemConfig",
    "Normalizer",
    "TrainingItem",
    "build_scene_field",
    "compute_normalizer",
    "episodes_equal",
    "generate_episode",
    "make_training_item",
    "read_episode",
    "scene_cloud",
    "write_episode",
]

"""Stage-based task scoring."""

from __future__ import annotations

from typing import NamedTuple

from .tasks import TaskSpec
from .types import WorldState


class ScoreResult(NamedTuple):
    success: bool
    stages_done: int
    loc_success: bool


def score(task: TaskSpec, world: WorldState) -> ScoreResult:
    """Count consecutive satisfied stages from the first; derive SR / Loc-SR."""
    stages_done = 0
    for predicate in task.stage_predicates:
        if not predicate(world):
            break
        stages_done += 1
    success = stages_done == task.n_stages
    loc_success = stages_done > task.loc_stage_index
    return ScoreResult(success, stages_done, loc_success)


def normalized_score(task: TaskSpec, stages_done: int) -> float:
    """Stage-accumulated score scaled to 10."""
    return 10.0 * stages_done / task.n_stages

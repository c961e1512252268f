import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from keyflow.data import (
    Episode,
    ItemConfig,
    compute_normalizer,
    episodes_equal,
    generate_episode,
    make_training_item,
    read_episode,
    write_episode,
)
from keyflow.data.normalizer import Normalizer
from keyflow.errors import (
    CorruptChunkError,
    InvalidArgumentError,
    MissingFieldError,
    NormalizationError,
    VersionMismatchError,
)
from keyflow.labeling import label_episode
from keyflow.world import Camera, get_task


@pytest.fixture(scope="module")
def lift_bar_episode():
    return generate_episode(get_task("lift-bar"), 0)


@pytest.fixture(scope="module")
def lift_bar_labels(lift_bar_episode):
    return label_episode(lift_bar_episode, "bar")


@pytest.fixture(scope="module")
def lift_bar_normalizer(lift_bar_episode):
    return compute_normalizer([lift_bar_episode])


def fake_episode(actions: np.ndarray, states: np.ndarray | None = None) -> Episode:
    t = actions.shape[0]
    if states is None:
        states = actions.reshape(t, 2, 8).copy()
    cam = Camera.look_at(eye=(1.0, 0, 0.5), target=(0.5, 0, 0), width=4, height=4)
    return Episode(
        task_id="lift-bar",
        language_id=0,
        seed=0,
        robot_states=states,
        actions=actions,
        object_ids=(0,),
        object_names=("bar",),
        object_poses=np.tile(
            np.array([0.5, 0.0, 0.02, 1.0, 0.0, 0.0, 0.0]), (t, 1, 1)
        ),
        cameras=[cam],
        depth=np.zeros((t, 1, 4, 4), dtype=np.float32),
        point_map=np.zeros((t, 1, 4, 4, 3), dtype=np.float32),
        view_object_ids=np.full((t, 1, 4, 4), -1, dtype=np.int32),
        signatures=np.ones((1, 16), dtype=np.float32),
    )


def base_action_rows(t: int) -> np.ndarray:
    rows = np.zeros((t, 16))
    rows[:, 3] = 1.0  # left quaternion w
    rows[:, 11] = 1.0  # right quaternion w
    rows[:, 7] = 1.0
    rows[:, 15] = 1.0
    rows[:, 0] = np.linspace(0.3, 0.7, t)
    rows[:, 1] = np.linspace(-0.1, 0.1, t)
    rows[:, 2] = np.linspace(0.0, 0.2, t)
    rows[:, 8] = np.linspace(0.4, 0.6, t)
    rows[:, 9] = np.linspace(-0.2, 0.0, t)
    rows[:, 10] = np.linspace(0.1, 0.3, t)
    return rows


# ------------------------------------------------------------- round trip


def test_write_read_round_trip(tmp_path, lift_bar_episode):
    write_episode(lift_bar_episode, tmp_path / "ep")
    back = read_episode(tmp_path / "ep")
    assert episodes_equal(lift_bar_episode, back)


def test_truncated_array_raises_corrupt_chunk(tmp_path, lift_bar_episode):
    write_episode(lift_bar_episode, tmp_path / "ep")
    f = tmp_path / "ep" / "actions.bin"
    f.write_bytes(f.read_bytes()[:-8])
    with pytest.raises(CorruptChunkError):
        read_episode(tmp_path / "ep")


def test_version_mismatch_raises(tmp_path, lift_bar_episode):
    write_episode(lift_bar_episode, tmp_path / "ep")
    meta_path = tmp_path / "ep" / "meta.json"
    meta = json.loads(meta_path.read_text())
    meta["format_version"] = 99
    meta_path.write_text(json.dumps(meta))
    with pytest.raises(VersionMismatchError):
        read_episode(tmp_path / "ep")


def test_missing_field_raises(tmp_path, lift_bar_episode):
    write_episode(lift_bar_episode, tmp_path / "ep")
    meta_path = tmp_path / "ep" / "meta.json"
    meta = json.loads(meta_path.read_text())
    del meta["task_id"]
    meta_path.write_text(json.dumps(meta))
    with pytest.raises(MissingFieldError):
        read_episode(tmp_path / "ep")
    # and a missing array file
    meta["task_id"] = "lift-bar"
    meta_path.write_text(json.dumps(meta))
    (tmp_path / "ep" / "depth.bin").unlink()
    with pytest.raises(MissingFieldError):
        read_episode(tmp_path / "ep")


def test_manifest_indexes_each_step_record(tmp_path):
    rows = base_action_rows(10)
    ep = fake_episode(rows)
    write_episode(ep, tmp_path / "ep10")
    meta = json.loads((tmp_path / "ep10" / "meta.json").read_text())
    assert meta["n_steps"] == 10
    for name in ("robot_states", "actions", "object_poses", "depth", "point_map"):
        assert meta["arrays"][name]["shape"][0] == 10


# -------------------------------------------------------------- normalizer


def test_normalizer_stated_rule():
    rows = base_action_rows(11)
    rows[:, 0] = np.linspace(0.0, 1.0, 11)  # x dim spans [0, 1]
    norm = compute_normalizer([fake_episode(rows)])
    assert norm.center[0] == pytest.approx(0.5)
    assert norm.half_range[0] == pytest.approx(0.525)
    # quaternion dims untouched, openness remapped from [0, 1]
    assert norm.center[3] == 0.0 and norm.half_range[3] == 1.0
    assert norm.center[7] == 0.5 and norm.half_range[7] == 0.5


def test_normalizer_constant_dim_rejected():
    rows = base_action_rows(5)
    rows[:, 9] = 0.25
    with pytest.raises(NormalizationError):
        compute_normalizer([fake_episode(rows)])


def test_normalizer_empty_corpus_rejected():
    with pytest.raises(NormalizationError):
        compute_normalizer([])


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_normalize_round_trip(seed):
    rows = base_action_rows(7)
    norm = compute_normalizer([fake_episode(rows)])
    rng = np.random.default_rng(seed)
    actions = rng.uniform(-1, 1, size=(5, 16))
    np.testing.assert_allclose(
        norm.denormalize(norm.normalize(actions)), actions, atol=1e-7
    )


def test_normalizer_json_round_trip_and_fingerprint():
    norm = compute_normalizer([fake_episode(base_action_rows(6))])
    back = Normalizer.from_json(norm.to_json())
    np.testing.assert_array_equal(norm.center, back.center)
    assert norm.fingerprint() == back.fingerprint()


# ----------------------------------------------------------- training item


def test_item_padding_at_last_step(lift_bar_episode, lift_bar_labels, lift_bar_normalizer):
    t = lift_bar_episode.n_steps - 1
    item = make_training_item(lift_bar_episode, t, lift_bar_labels, lift_bar_normalizer)
    final = lift_bar_normalizer.normalize(lift_bar_episode.actions[-1])
    assert item.continuous_target.shape == (50, 16)
    np.testing.assert_allclose(item.continuous_target, np.tile(final, (50, 1)), atol=0)


def test_item_keypose_padding_repeats_last_keyframe(
    lift_bar_episode, lift_bar_labels, lift_bar_normalizer
):
    last_kf = lift_bar_labels.keyframe_steps[-1]
    t = last_kf - 1
    item = make_training_item(lift_bar_episode, t, lift_bar_labels, lift_bar_normalizer)
    for row in range(1, 4):
        np.testing.assert_array_equal(item.keypose_target[row], item.keypose_target[0])
        np.testing.assert_array_equal(item.pointflow_target[row], item.pointflow_target[0])


def test_item_window_matches_slicing_oracle(
    lift_bar_episode, lift_bar_labels, lift_bar_normalizer
):
    rng = np.random.default_rng(0)
    n = lift_bar_episode.n_steps
    for t in rng.integers(0, n, size=8):
        t = int(t)
        item = make_training_item(lift_bar_episode, t, lift_bar_labels, lift_bar_normalizer)
        # continuous rows: direct index arithmetic over the raw episode
        for j in range(50):
            src = min(t + j, n - 1)
            np.testing.assert_allclose(
                lift_bar_normalizer.denormalize(item.continuous_target[j]),
                lift_bar_episode.actions[src],
                atol=1e-7,
            )
        # keypose rows: next keyframes with repetition padding
        upcoming = [k for k in lift_bar_labels.keyframe_steps if k > t] or [
            lift_bar_labels.keyframe_steps[-1]
        ]
        expect = (upcoming + [upcoming[-1]] * 4)[:4]
        for j, k in enumerate(expect):
            np.testing.assert_allclose(
                lift_bar_normalizer.denormalize(item.keypose_target[j]),
                lift_bar_episode.actions[k],
                atol=1e-7,
            )


@settings(max_examples=20, deadline=None)
@given(st.data())
def test_item_shapes_property(data, lift_bar_episode, lift_bar_labels, lift_bar_normalizer):
    t = data.draw(st.integers(min_value=0, max_value=lift_bar_episode.n_steps - 1))
    cfg = ItemConfig(n_s=128)
    item = make_training_item(lift_bar_episode, t, lift_bar_labels, lift_bar_normalizer, cfg)
    item.validate_shapes(cfg, lift_bar_labels.query_points.shape[0])
    assert item.scene_field.points.shape == (128, 3)
    assert np.all(np.abs(item.continuous_target[:, [0, 1, 2, 8, 9, 10]]) <= 1.0 + 1e-9)


def test_item_requires_labels(lift_bar_episode, lift_bar_normalizer):
    with pytest.raises(MissingFieldError):
        make_training_item(lift_bar_episode, 0, None, lift_bar_normalizer)


def test_item_rejects_out_of_range_step(
    lift_bar_episode, lift_bar_labels, lift_bar_normalizer
):
    with pytest.raises(InvalidArgumentError):
        make_training_item(
            lift_bar_episode, lift_bar_episode.n_steps, lift_bar_labels, lift_bar_normalizer
        )

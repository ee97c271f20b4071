import json

import numpy as np
import pytest

from conftest import box
from rtchannel.channel import PruningConfig
from rtchannel.dataset import (CHUNK_SIZE, COLUMNS, Dataset, DatasetError, SplitSpec, dataset_stats,
                               generate_dataset, meta_path, read_csv, split, write_csv)
from rtchannel.raytracer import TraceConfig
from rtchannel.scene import Scene, inside_any_footprint


def fake(n, seed=0):
    rng = np.random.default_rng(seed)
    data = np.column_stack([np.full((n, 3), [150.0, 150.0, 16.0]), rng.uniform(0, 300, (n, 2)),
                            np.full(n, 1.5), rng.normal(0, 1e-4, (n, 2))])
    return Dataset(data, {"total_receivers": n, "valid_count": n, "valid_ratio": 1.0})


def test_free_space_every_receiver_is_valid(free_space):
    d = generate_dataset(free_space, (150, 150, 16), 100, seed=3)
    assert len(d) == 100
    assert d.meta["valid_ratio"] == 1.0 and d.meta["valid_count"] == 100
    assert np.all(d.X[:, :3] == [150, 150, 16])
    assert np.all(d.X[:, 5] == 1.5)
    # only the direct path: |h| is exactly Friis
    lam = 299792458.0 / 7e9
    dist = np.linalg.norm(d.X[:, 3:] - d.X[:, :3], axis=1)
    assert np.allclose(np.hypot(d.h_re, d.h_im), lam / (4 * np.pi * dist), rtol=1e-12)


def test_walled_off_transmitter_gives_no_samples():
    s = Scene((0, 200, 0, 200), buildings=(box(90, 90, 110, 110, 30.0),))
    d = generate_dataset(s, (100, 100, 16), 200, seed=1)
    assert len(d) == 0
    assert d.meta["valid_ratio"] == 0.0
    assert d.data.shape == (0, 8)


def test_rows_follow_sampling_order_and_avoid_buildings(city):
    d = generate_dataset(city, (45, 50, 16), 300, seed=9)
    assert 0 < len(d) <= 300
    assert d.meta["valid_count"] == len(d)
    assert d.meta["valid_ratio"] == len(d) / 300
    assert not np.any(inside_any_footprint(city, d.X[:, 3], d.X[:, 4]))
    again = generate_dataset(city, (45, 50, 16), 300, seed=9)
    assert np.array_equal(d.data, again.data)
    assert d.meta == again.meta
    other = generate_dataset(city, (45, 50, 16), 300, seed=10)
    assert not np.array_equal(d.data[:5], other.data[:5])


def test_worker_count_does_not_change_output(city):
    n = 2 * CHUNK_SIZE + 100
    one = generate_dataset(city, (45, 50, 16), n, seed=2, workers=1)
    three = generate_dataset(city, (45, 50, 16), n, seed=2, workers=3)
    assert np.array_equal(one.data, three.data)
    assert one.meta == three.meta


def test_zero_threshold_keeps_strongest_path_only(city):
    d30 = generate_dataset(city, (45, 50, 16), 200, seed=4)
    d0 = generate_dataset(city, (45, 50, 16), 200, prune_cfg=PruningConfig(0.0), seed=4)
    assert len(d0) <= len(d30)


def test_generation_preconditions(free_space):
    with pytest.raises(DatasetError):
        generate_dataset(free_space, (1, 1, 0.0), 10)
    with pytest.raises(DatasetError):
        generate_dataset(free_space, (1, 1, 5.0), 0)


def test_stats_examples():
    d = Dataset([[0, 0, 1, 1, 1, 1, 1.0, 0.0], [0, 0, 1, 1, 1, 1, -1.0, 0.0]])
    s = dataset_stats(d)
    assert s == {"mean_re": 0.0, "var_re": 1.0, "mean_im": 0.0, "var_im": 0.0}
    dup = Dataset([[0, 0, 1, 1, 1, 1, 0.25, -0.5]] * 2)
    assert dataset_stats(dup)["var_re"] == 0.0 and dataset_stats(dup)["var_im"] == 0.0
    with pytest.raises(DatasetError):
        dataset_stats(Dataset([[0, 0, 1, 1, 1, 1, 1.0, 0.0]]))


def test_split_sizes_and_partition():
    d = fake(9307)
    parts = split(d, SplitSpec(seed=5))
    assert tuple(len(parts[k]) for k in ("train", "validation", "holdout")) == (800, 200, 8307)
    allidx = np.concatenate(list(parts.values()))
    assert len(np.unique(allidx)) == 9307
    assert np.array_equal(np.sort(allidx), np.arange(9307))
    again = split(d, SplitSpec(seed=5))
    assert all(np.array_equal(parts[k], again[k]) for k in parts)
    other = split(d, SplitSpec(seed=6))
    assert not np.array_equal(parts["train"], other["train"])


def test_split_preconditions():
    with pytest.raises(DatasetError):
        split(fake(500), SplitSpec())
    with pytest.raises(DatasetError):
        SplitSpec(train_fraction=1.0)


def test_csv_round_trip_is_bit_exact(tmp_path, city):
    d = generate_dataset(city, (45, 50, 16), 150, seed=0)
    p = tmp_path / "ds.csv"
    write_csv(d, p)
    back = read_csv(p)
    assert back.data.tobytes() == d.data.tobytes()
    assert back.meta == json.loads(json.dumps(d.meta))
    assert dataset_stats(back) == dataset_stats(d)
    text = p.read_bytes()
    assert text.splitlines()[0] == ",".join(COLUMNS).encode()
    assert b"\r" not in text
    assert meta_path(p).name == "ds.meta.json"
    keys = set(json.loads(meta_path(p).read_text()))
    assert {"total_receivers", "valid_count", "valid_ratio", "seed", "trace_cfg", "prune_cfg",
            "scene_hash"} <= keys


def test_csv_parse_errors_name_the_row(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text(",".join(COLUMNS) + "\n" + ",".join(["1"] * 8) + "\n" + ",".join(["1"] * 7) + "\n")
    with pytest.raises(DatasetError, match="row 3"):
        read_csv(p)
    p.write_text(",".join(COLUMNS) + "\n" + ",".join(["x"] * 8) + "\n")
    with pytest.raises(DatasetError, match="row 2"):
        read_csv(p)
    p.write_text("a,b\n")
    with pytest.raises(DatasetError, match="row 1"):
        read_csv(p)


def test_samples_view():
    d = fake(3)
    s = d.samples
    assert len(s) == 3
    assert s[1].h == complex(d.h_re[1], d.h_im[1])
    assert s[0].tx.as_tuple() == (150.0, 150.0, 16.0)
    with pytest.raises(DatasetError):
        d.target("abs")


def test_non_finite_rows_rejected():
    with pytest.raises(DatasetError):
        Dataset([[0, 0, 0, 0, 0, 0, np.nan, 0]])


def test_ground_reflection_counts_toward_h():
    # a reflecting ground adds a second in-window path on short links
    bare = Scene((0, 300, 0, 300), terrain_material=None)
    ground = Scene((0, 300, 0, 300))
    a = generate_dataset(bare, (150, 150, 16), 50, seed=1)
    b = generate_dataset(ground, (150, 150, 16), 50, seed=1)
    assert np.array_equal(a.X, b.X)
    assert not np.allclose(a.h_re, b.h_re)
    assert TraceConfig().max_reflection_order == 2

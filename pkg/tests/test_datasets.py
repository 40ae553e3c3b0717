import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from surgibench.datasets.rawarray import read_array, write_array
from surgibench.datasets.store import (
    DemonstrationSet,
    canonical_actions,
    read_episode,
)

DTYPES = ["<f4", "<u1", "<i4", "<f8", "<i8"]


@settings(max_examples=30, deadline=None)
@given(
    st.integers(0, 2**31 - 1),
    st.sampled_from(DTYPES),
    st.lists(st.integers(1, 6), min_size=1, max_size=4),
)
def test_rawarray_round_trip_bitwise(seed, dtype, shape):
    import tempfile

    rng = np.random.default_rng(seed)
    if dtype in ("<f4", "<f8"):
        arr = rng.normal(size=shape).astype(dtype)
    else:
        arr = rng.integers(0, 100, size=shape).astype(dtype)
    with tempfile.TemporaryDirectory() as d:
        path = Path(d) / "a.bin"
        write_array(path, arr)
        back = read_array(path)
    assert back.dtype == np.dtype(dtype)
    assert back.shape == tuple(shape)
    assert back.tobytes() == arr.tobytes()


def test_rawarray_rejects_bad_magic(tmp_path):
    path = tmp_path / "a.bin"
    write_array(path, np.zeros((2, 2), dtype="<f4"))
    data = bytearray(path.read_bytes())
    data[0] ^= 0xFF
    path.write_bytes(bytes(data))
    with pytest.raises(ValueError):
        read_array(path)


def test_rawarray_dim_cap(tmp_path):
    with pytest.raises(ValueError):
        write_array(tmp_path / "big.bin", np.zeros(70000, dtype="<u1"))


def test_canonical_actions_float32_exact():
    vec = np.array([[0.1, 0.2, 0.3]])
    canon = canonical_actions(vec)
    assert canon.dtype == np.float64
    np.testing.assert_array_equal(canon, vec.astype(np.float32).astype(np.float64))
    np.testing.assert_array_equal(canonical_actions(canon), canon)


def test_episode_round_trip(small_dataset):
    ep = small_dataset.load_episode(0)
    back = read_episode(small_dataset.episode_dir(0))
    assert back.seed == ep.seed
    assert back.success == ep.success
    assert back.actions.tobytes() == ep.actions.tobytes()
    assert back.proprio.tobytes() == ep.proprio.tobytes()
    for cam in ep.frames:
        for key in ("rgb", "depth", "seg"):
            assert back.frames[cam][key].tobytes() == ep.frames[cam][key].tobytes()
    assert back.cloud.tobytes() == ep.cloud.tobytes()


def test_manifest_counts_and_open(small_dataset):
    reopened = DemonstrationSet.open(small_dataset.root)
    assert len(reopened) == len(small_dataset) == 5
    assert reopened.manifest["episode_count"] == 5
    assert not list(small_dataset.root.glob(".tmp_*"))  # atomic writes cleaned up


def test_checksum_detects_corruption(small_dataset, tmp_path):
    import shutil

    root = tmp_path / "corrupt"
    shutil.copytree(small_dataset.root, root)
    ds = DemonstrationSet.open(root)
    assert ds.verify_checksums() == []
    target = root / ds.manifest["episodes"][2]["name"] / "actions.f32"
    data = bytearray(target.read_bytes())
    data[-1] ^= 0x01
    target.write_bytes(bytes(data))
    bad = ds.verify_checksums()
    assert bad == [ds.manifest["episodes"][2]["name"]]


def test_validate_fresh_set_zero_deviation(small_dataset):
    report = small_dataset.validate()
    assert report["valid"]
    assert report["max_deviation"] == 0.0
    assert all(e["success_match"] for e in report["episodes"])


def test_validate_flags_mutated_actions(small_dataset, tmp_path):
    import shutil

    root = tmp_path / "mutated"
    shutil.copytree(small_dataset.root, root)
    ds = DemonstrationSet.open(root)
    path = root / ds.manifest["episodes"][0]["name"] / "actions.f32"
    arr = read_array(path).copy()
    arr[0, 0] += 0.002
    write_array(path, arr)
    report = ds.validate()
    assert not report["valid"]
    assert ds.manifest["episodes"][0]["name"] in report["invalid"]


def test_subsample_nesting(small_dataset):
    s2 = small_dataset.subsample(2, seed=9)
    s4 = small_dataset.subsample(4, seed=9)
    assert set(s2.indices) <= set(s4.indices)
    assert s2.indices == s4.indices[:2]
    full = small_dataset.subsample(5, seed=9)
    assert sorted(full.indices) == list(range(5))
    with pytest.raises(ValueError):
        small_dataset.subsample(6, seed=0)
    with pytest.raises(ValueError):
        small_dataset.subsample(0, seed=0)


def test_subsample_different_seeds_differ(small_dataset):
    picks = {tuple(small_dataset.subsample(3, seed=s).indices) for s in range(20)}
    assert len(picks) > 1


def test_subsampled_seeds_subset(small_dataset):
    sub = small_dataset.subsample(3, seed=1)
    assert set(sub.seeds()) <= set(small_dataset.seeds())
    assert len(sub.entries) == 3

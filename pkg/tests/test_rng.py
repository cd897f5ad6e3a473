"""Determinism and distribution smoke tests for the in-repo generator."""

import numpy as np
import pytest

from safecharge.rng import Rng


def test_same_seed_same_stream():
    a, b = Rng(42), Rng(42)
    assert [a.next_u64() for _ in range(10)] == [b.next_u64() for _ in range(10)]
    assert [a.uniform() for _ in range(10)] == [b.uniform() for _ in range(10)]


def test_different_seeds_differ():
    assert Rng(42).next_u64() != Rng(43).next_u64()


def test_zero_seed_not_degenerate():
    rng = Rng(0)
    draws = [rng.uniform() for _ in range(100_000)]
    assert abs(np.mean(draws) - 0.5) < 0.01
    assert len(set(draws[:100])) == 100


def test_uniform_in_unit_interval():
    rng = Rng(7)
    for _ in range(1000):
        u = rng.uniform()
        assert 0.0 <= u < 1.0


def test_normal_moments():
    rng = Rng(3)
    draws = np.array([rng.normal() for _ in range(100_000)])
    assert abs(draws.mean()) < 0.02
    assert abs(draws.std() - 1.0) < 0.02


def test_integer_bounds_and_determinism():
    rng = Rng(5)
    vals = [rng.integer(10) for _ in range(10_000)]
    assert min(vals) == 0 and max(vals) == 9
    assert Rng(5).integers(10, 50).tolist() == Rng(5).integers(10, 50).tolist()
    with pytest.raises(ValueError):
        rng.integer(0)


def test_subset_indices_sorted_distinct():
    rng = Rng(9)
    idx = rng.subset_indices(1000, 512)
    assert len(idx) == 512
    assert len(set(idx.tolist())) == 512
    assert list(idx) == sorted(idx)
    # identity when k >= n
    assert Rng(9).subset_indices(5, 10).tolist() == [0, 1, 2, 3, 4]


def test_normal_array_shape():
    arr = Rng(1).normal_array((3, 4), mean=2.0, std=0.5)
    assert arr.shape == (3, 4)
    assert np.isfinite(arr).all()

#!/usr/bin/env python3
"""Tests for the benchmark metrics"""

import math

import numpy as np
import pytest

from errors import InputError
from metrics import amari_distance, cluster_split_error, mixture_density_on_hyperplane, r_squared, separation_error


def test_amari_zero_for_scaled_permutation(rng):
    B = rng.normal(size=(4, 4))
    P = np.eye(4)[[2, 0, 3, 1]] * np.array([1.0, -2.0, 0.5, 3.0])[:, None]
    assert amari_distance(P @ B, B) == pytest.approx(0.0, abs=1e-12)
    assert amari_distance(B, B) == pytest.approx(0.0, abs=1e-12)


def test_amari_bounds(rng):
    value = amari_distance(rng.normal(size=(5, 5)), np.eye(5))
    assert 0.0 < value <= 1.0
    assert amari_distance(np.ones((2, 2)), np.eye(2)) == pytest.approx(1.0)
    assert amari_distance([[3.0]], [[1.0]]) == 0.0


def test_amari_rejects_bad_input():
    with pytest.raises(InputError):
        amari_distance(np.eye(2), np.eye(3))
    with pytest.raises(InputError):
        amari_distance(np.eye(2), np.zeros((2, 2)))


def test_separation_error_ignores_label_orientation():
    labels = np.array([0, 0, 0, 1, 1, 1])
    assert separation_error(labels, [-1, -1, -1, 1, 1, 1]) == 0.0
    assert separation_error(labels, [1, 1, 1, -1, -1, -1]) == 0.0
    assert separation_error(labels, [-1, -1, 1, 1, 1, 1]) == pytest.approx(1.0 / 6.0)
    with pytest.raises(InputError):
        separation_error([0, 1, 2], [1, 1, 1])


def test_cluster_split_error():
    labels = np.array([0, 0, 0, 1, 1, 2, 2, 2])
    assert cluster_split_error(labels, [1, 1, 1, -1, -1, 1, 1, 1]) == 0.0
    assert cluster_split_error(labels, [1, -1, 1, -1, -1, 1, 1, -1]) == pytest.approx(2.0 / 8.0)


def test_cluster_split_error_one_sided_split_fails():
    labels = np.array([0, 0, 1, 1, 2, 2])
    assert cluster_split_error(labels, [1, 1, 1, 1, 1, 1]) == 1.0
    assert cluster_split_error(labels, [-1, -1, -1, -1, -1, -1]) == 1.0
    # majorities all on one side
    assert cluster_split_error(labels, [1, 1, 1, 1, 1, -1]) == 1.0


def test_r_squared():
    y = np.array([1.0, 2.0, 3.0, 4.0])
    assert r_squared(y, y) == 1.0
    assert r_squared(y, np.full(4, y.mean())) == pytest.approx(0.0, abs=1e-15)
    assert r_squared(y, [1.0, 2.0, 3.0, 3.0]) == pytest.approx(1.0 - 1.0 / 5.0)
    with pytest.raises(InputError):
        r_squared([1.0, 1.0], [1.0, 1.0])


def test_mixture_density_on_hyperplane():
    value = mixture_density_on_hyperplane([1.0, 0.0], 0.0, [[0.0, 5.0]], [[2.0, 1.0]], [1.0])
    assert value == pytest.approx(1.0 / (2.0 * math.sqrt(2.0 * math.pi)))
    two = mixture_density_on_hyperplane([0.6, 0.8], 1.0, [[0.0, 0.0], [1.0, 1.0]], np.ones((2, 2)), [0.5, 0.5])
    z1, z2 = 1.0, 1.0 - 1.4
    expected = 0.5 * (math.exp(-0.5 * z1 * z1) + math.exp(-0.5 * z2 * z2)) / math.sqrt(2.0 * math.pi)
    assert two == pytest.approx(expected)

"""Evaluation metrics for the projection pursuit benchmarks."""

import math

import numpy as np

from errors import InputError


def amari_distance(A, B) -> float:
    """
    Amari distance between unmixing matrices A and B, scaled onto [0, 1].

    Zero exactly when A B^-1 is a scaled permutation.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape != B.shape:
        raise InputError(f"need two square matrices of equal size, got {A.shape} and {B.shape}")
    d = A.shape[0]
    if d == 1:
        return 0.0
    if np.linalg.cond(B) > 1e12:
        raise InputError("B is singular")
    P = np.abs(A @ np.linalg.inv(B))
    rows = np.sum(P.sum(axis=1) / P.max(axis=1) - 1.0)
    cols = np.sum(P.sum(axis=0) / P.max(axis=0) - 1.0)
    return float((rows + cols) / (2.0 * d) / (d - 1))


def separation_error(labels_true, side) -> float:
    """Misassignment fraction under the better of the two label-to-side matchings."""
    labels = np.asarray(labels_true).ravel()
    side = np.asarray(side).ravel() > 0
    if labels.size != side.size:
        raise InputError(f"{labels.size} labels but {side.size} sides")
    classes = np.unique(labels)
    if classes.size != 2:
        raise InputError(f"need exactly two distinct labels, got {classes.size}")
    wrong = np.mean((labels == classes[0]) != side)
    return float(min(wrong, 1.0 - wrong))


def cluster_split_error(labels, side) -> float:
    """
    Fraction of points lying on the minority side of their own cluster.

    A split that leaves every cluster's majority on the same side separates
    nothing and scores 1.
    """
    labels = np.asarray(labels).ravel()
    side = np.asarray(side).ravel() > 0
    if labels.size != side.size:
        raise InputError(f"{labels.size} labels but {side.size} sides")
    total = 0
    majority = set()
    for c in np.unique(labels):
        count = int(np.sum(labels == c))
        on_right = int(np.sum(side[labels == c]))
        total += min(on_right, count - on_right)
        majority.add(2 * on_right > count)
    if len(majority) < 2:
        return 1.0
    return total / labels.size


def r_squared(y, yhat) -> float:
    """1 - SSE/SST."""
    y = np.asarray(y, dtype=float).ravel()
    yhat = np.asarray(yhat, dtype=float).ravel()
    if y.size != yhat.size or y.size < 2:
        raise InputError("y and yhat must have equal length of at least 2")
    sst = np.sum((y - y.mean()) ** 2)
    if not sst > 0:
        raise InputError("R^2 is undefined for a constant response")
    return float(1.0 - np.sum((y - yhat) ** 2) / sst)


def mixture_density_on_hyperplane(v, b: float, means, sds, proportions) -> float:
    """True mixture density of the projection x.v at b for an axis-aligned Gaussian mixture."""
    v = np.asarray(v, dtype=float).ravel()
    centre = np.asarray(means, dtype=float) @ v
    scale = np.sqrt(np.asarray(sds, dtype=float) ** 2 @ v ** 2)
    z = (b - centre) / scale
    dens = np.exp(-0.5 * z * z) / (scale * math.sqrt(2.0 * math.pi))
    return float(np.asarray(proportions, dtype=float) @ dens)

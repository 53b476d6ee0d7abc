"""
Exact kernel sums in log-linear time

For sample points x_i with coefficients w_i, evaluation points t_j and
bandwidth h this evaluates

    S(t_j)  = sum_i K((x_i - t_j)/h) w_i
    S'(t_j) = sum_i K'((x_i - t_j)/h) w_i

for poly-exponential kernels. Both collections come out of two linear sweeps
over the sorted points (one ascending, one descending), so the cost is
dominated by sorting.

- fk_sum: exact sweep, or a linear-binning approximation when nbin is given
- naive_ksum: the quadratic definition, used as an oracle
- bin_sample: linear binning onto an equally spaced grid
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
from numba import njit

from errors import InputError
from kernel_core import PolyExpKernel, default_kernel, eval_kernel, eval_kernel_derivative

logger = logging.getLogger(__name__)

MODES = ("sum", "dsum", "both")

# Evaluation points handled per block by the naive oracle
NAIVE_BLOCK_ENTRIES = 4_000_000


@dataclass(frozen=True)
class WeightedSample:
    """
    Sample values with per-point coefficients, kept in ascending order.

    values[j] and weights[j] belong to the input point order[j]; build one
    with WeightedSample.create and re-weight it with with_weights to avoid
    sorting again.
    """

    values: np.ndarray
    weights: np.ndarray
    order: np.ndarray

    @classmethod
    def create(cls, values, weights=None) -> "WeightedSample":
        x = np.asarray(values, dtype=float).ravel()
        if x.size == 0:
            raise InputError("sample must contain at least one point")
        if not np.all(np.isfinite(x)):
            raise InputError("sample values must be finite")
        w = np.ones_like(x) if weights is None else np.asarray(weights, dtype=float).ravel()
        if w.shape != x.shape:
            raise InputError(f"weights have length {w.size}, sample has {x.size}")
        if not np.all(np.isfinite(w)):
            raise InputError("sample weights must be finite")
        order = np.argsort(x, kind="stable")
        return cls(values=x[order], weights=w[order], order=order)

    @property
    def n(self) -> int:
        return self.values.size

    def with_weights(self, weights) -> "WeightedSample":
        """Same points, new coefficients given in the caller's original order."""
        w = np.asarray(weights, dtype=float).ravel()
        if w.shape != self.values.shape:
            raise InputError(f"weights have length {w.size}, sample has {self.n}")
        if not np.all(np.isfinite(w)):
            raise InputError("sample weights must be finite")
        return WeightedSample(values=self.values, weights=w[self.order], order=self.order)

    def original_values(self) -> np.ndarray:
        out = np.empty_like(self.values)
        out[self.order] = self.values
        return out

    def original_weights(self) -> np.ndarray:
        out = np.empty_like(self.weights)
        out[self.order] = self.weights
        return out


@dataclass(frozen=True)
class KernelSums:
    """Sums per evaluation point, in the caller's evaluation order."""

    ksum: Optional[np.ndarray] = None
    dksum: Optional[np.ndarray] = None


SampleLike = Union[WeightedSample, Sequence[float], np.ndarray]


def as_sample(sample: SampleLike) -> WeightedSample:
    if isinstance(sample, WeightedSample):
        return sample
    return WeightedSample.create(sample)


def _binomial_table(order: int) -> np.ndarray:
    table = np.zeros((order + 1, order + 1))
    for k in range(order + 1):
        table[k, 0] = 1.0
        for m in range(1, k + 1):
            table[k, m] = table[k - 1, m - 1] + (table[k - 1, m] if m < k else 0.0)
    return table


@njit(cache=True)
def _shift(hi, lo, delta, binom, pw):
    # Move the accumulators a distance delta >= 0 further from every stored point:
    # a_k <- e^{-delta} sum_{m<=k} C(k,m) delta^{k-m} a_m
    q = hi.shape[0]
    pw[0] = np.exp(-delta)
    for p in range(1, q):
        pw[p] = pw[p - 1] * delta
    for k in range(q - 1, -1, -1):
        acc_hi = 0.0
        acc_lo = 0.0
        for m in range(k + 1):
            f = binom[k, m] * pw[k - m]
            acc_hi += f * hi[m]
            acc_lo += f * lo[m]
        hi[k] = acc_hi
        lo[k] = acc_lo


@njit(cache=True)
def _add(hi, lo, w):
    # Neumaier-compensated hi[0] += w
    s = hi[0]
    t = s + w
    if abs(s) >= abs(w):
        lo[0] += (s - t) + w
    else:
        lo[0] += (w - t) + s
    hi[0] = t


@njit(cache=True)
def _sweep(z, w, e, beta, gamma, binom):
    """
    z, e sorted ascending and already divided by h; returns ksum, dksum
    in the sorted evaluation order.
    """
    n = z.shape[0]
    m = e.shape[0]
    q = beta.shape[0]
    ksum = np.zeros(m)
    dksum = np.zeros(m)
    hi = np.zeros(q)
    lo = np.zeros(q)
    pw = np.zeros(q)

    # Ascending: points with z_i <= e_j (ties go left)
    pos = min(z[0], e[0])
    i = 0
    tie_at = z[0]
    tie_w = 0.0
    for j in range(m):
        while i < n and z[i] <= e[j]:
            if z[i] > pos:
                _shift(hi, lo, z[i] - pos, binom, pw)
                pos = z[i]
            _add(hi, lo, w[i])
            if z[i] == tie_at:
                tie_w += w[i]
            else:
                tie_at = z[i]
                tie_w = w[i]
            i += 1
        if e[j] > pos:
            _shift(hi, lo, e[j] - pos, binom, pw)
            pos = e[j]
        s = 0.0
        d = 0.0
        for k in range(q):
            a = hi[k] + lo[k]
            s += beta[k] * a
            d -= gamma[k] * a
        # a coincident sample point contributes K'(0) = 0, not -gamma_0 w
        if i > 0 and tie_at == e[j]:
            d += gamma[0] * tie_w
        ksum[j] = s
        dksum[j] = d

    # Descending: points with z_i > e_j
    hi[:] = 0.0
    lo[:] = 0.0
    pos = max(z[n - 1], e[m - 1])
    i = n - 1
    for j in range(m - 1, -1, -1):
        while i >= 0 and z[i] > e[j]:
            if z[i] < pos:
                _shift(hi, lo, pos - z[i], binom, pw)
                pos = z[i]
            _add(hi, lo, w[i])
            i -= 1
        if e[j] < pos:
            _shift(hi, lo, pos - e[j], binom, pw)
            pos = e[j]
        s = 0.0
        d = 0.0
        for k in range(q):
            a = hi[k] + lo[k]
            s += beta[k] * a
            d += gamma[k] * a
        ksum[j] += s
        dksum[j] += d
    return ksum, dksum


def _check_args(h: float, mode: str):
    if not np.isfinite(h) or h <= 0:
        raise InputError(f"bandwidth h must be positive, got {h}")
    if mode not in MODES:
        raise InputError(f"mode must be one of {MODES}, got '{mode}'")


def _eval_points(x_eval) -> np.ndarray:
    e = np.asarray(x_eval, dtype=float).ravel()
    if e.size == 0:
        raise InputError("x_eval must contain at least one point")
    if not np.all(np.isfinite(e)):
        raise InputError("evaluation points must be finite")
    return e


def _pack(ksum, dksum, mode) -> KernelSums:
    return KernelSums(
        ksum=ksum if mode in ("sum", "both") else None,
        dksum=dksum if mode in ("dsum", "both") else None,
    )


def fk_sum(
    sample: SampleLike,
    h: float,
    kernel: Optional[PolyExpKernel] = None,
    x_eval=None,
    mode: str = "sum",
    nbin: Optional[int] = None,
) -> KernelSums:
    """
    Kernel and/or kernel-derivative sums at x_eval.

    When x_eval is omitted the sums are evaluated at the sample points and
    returned in the sample's original order. With nbin the sample is first
    linearly binned onto nbin grid nodes and the exact sweep runs over the
    nodes.
    """
    _check_args(h, mode)
    kernel = kernel or default_kernel()
    sample = as_sample(sample)
    if x_eval is None:
        e_sorted = sample.values
        e_order = sample.order
    else:
        e = _eval_points(x_eval)
        e_order = np.argsort(e, kind="stable")
        e_sorted = e[e_order]

    if nbin is not None:
        sample = bin_sample(sample, nbin)

    # Pooled median centring keeps the scaled coordinates small
    centre = float(np.median(np.concatenate([sample.values, e_sorted])))
    z = (sample.values - centre) / h
    t = (e_sorted - centre) / h
    beta = np.asarray(kernel.coefficients, dtype=float)
    gamma = np.asarray(kernel.gammas, dtype=float)
    ks, dks = _sweep(z, sample.weights, t, beta, gamma, _binomial_table(kernel.order))

    ksum = np.empty_like(ks)
    ksum[e_order] = ks
    dksum = np.empty_like(dks)
    dksum[e_order] = dks
    return _pack(ksum, dksum, mode)


def naive_ksum(
    sample: SampleLike,
    h: float,
    kernel: Optional[PolyExpKernel] = None,
    x_eval=None,
    mode: str = "sum",
) -> KernelSums:
    """Direct double sum, quadratic in the number of points."""
    _check_args(h, mode)
    kernel = kernel or default_kernel()
    sample = as_sample(sample)
    x = sample.original_values()
    w = sample.original_weights()
    e = x if x_eval is None else _eval_points(x_eval)

    ksum = np.zeros(e.size)
    dksum = np.zeros(e.size)
    block = max(1, NAIVE_BLOCK_ENTRIES // x.size)
    for start in range(0, e.size, block):
        stop = min(start + block, e.size)
        u = (x[None, :] - e[start:stop, None]) / h
        if mode != "dsum":
            ksum[start:stop] = eval_kernel(kernel, u) @ w
        if mode != "sum":
            dksum[start:stop] = eval_kernel_derivative(kernel, u) @ w
    return _pack(ksum, dksum, mode)


def bin_sample(sample: SampleLike, nbin: int) -> WeightedSample:
    """
    Linear binning onto nbin equally spaced nodes spanning the sample range.

    Each weight is split between its two neighbouring nodes in proportion to
    proximity, which preserves the total weight and the first moment.
    """
    if nbin is None or int(nbin) != nbin or nbin < 2:
        raise InputError(f"nbin must be an integer >= 2, got {nbin}")
    nbin = int(nbin)
    sample = as_sample(sample)
    lo, hi = sample.values[0], sample.values[-1]
    if hi == lo:
        node = np.array([lo])
        return WeightedSample(values=node, weights=np.array([sample.weights.sum()]), order=np.zeros(1, dtype=int))

    grid = np.linspace(lo, hi, nbin)
    delta = (hi - lo) / (nbin - 1)
    t = (sample.values - lo) / delta
    idx = np.clip(np.floor(t).astype(int), 0, nbin - 2)
    frac = np.clip(t - idx, 0.0, 1.0)
    weights = np.bincount(idx, weights=sample.weights * (1.0 - frac), minlength=nbin)
    weights += np.bincount(idx + 1, weights=sample.weights * frac, minlength=nbin)
    logger.debug("binned %d points onto %d nodes", sample.n, nbin)
    return WeightedSample(values=grid, weights=weights, order=np.arange(nbin))

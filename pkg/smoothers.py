"""
Kernel smoothers built on fk_sum

- kernel density estimation
- Nadaraya-Watson and local-linear regression
- bandwidth selection: Silverman's rule, leave-one-out pseudo-likelihood
  and leave-one-out squared error, minimised by golden-section search
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

import settings
from errors import InputError, NumericError
from fastsum import WeightedSample, as_sample, fk_sum
from kernel_core import PolyExpKernel, default_kernel, kernel_constants

logger = logging.getLogger(__name__)

BANDWIDTH_KINDS = ("fixed", "silverman", "cv")
REGRESSION_METHODS = ("nw", "loclin")
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class BandwidthSpec:
    """
    How to choose h.

    fixed: value is h; silverman: value is the multiplier; cv: bracket is
    the search interval, or None for the default bracket.
    """

    kind: str
    value: float = 1.0
    bracket: Optional[Tuple[float, float]] = None
    resolved: Optional[float] = None

    def __post_init__(self):
        if self.kind not in BANDWIDTH_KINDS:
            raise InputError(f"bandwidth kind must be one of {BANDWIDTH_KINDS}, got '{self.kind}'")
        if self.kind in ("fixed", "silverman") and not self.value > 0:
            raise InputError(f"{self.kind} bandwidth value must be positive, got {self.value}")
        if self.bracket is not None:
            lo, hi = self.bracket
            if not 0 < lo < hi:
                raise InputError(f"cv bracket must satisfy 0 < lo < hi, got {self.bracket}")
        if self.resolved is not None and not self.resolved > 0:
            raise InputError(f"resolved bandwidth must be positive, got {self.resolved}")

    @classmethod
    def fixed(cls, h: float) -> "BandwidthSpec":
        return cls("fixed", value=h, resolved=h)

    @classmethod
    def silverman(cls, multiplier: float = 1.0) -> "BandwidthSpec":
        return cls("silverman", value=multiplier)

    @classmethod
    def cv(cls, lo: Optional[float] = None, hi: Optional[float] = None) -> "BandwidthSpec":
        return cls("cv", bracket=None if lo is None or hi is None else (lo, hi))


@dataclass(frozen=True)
class DensityEstimate:
    eval_points: np.ndarray
    density: np.ndarray
    h: float
    kernel: PolyExpKernel


@dataclass(frozen=True)
class RegressionEstimate:
    eval_points: np.ndarray
    fitted: np.ndarray
    h: float
    kernel: PolyExpKernel
    method: str


def _uniform_sample(x) -> WeightedSample:
    sample = as_sample(x)
    if isinstance(x, WeightedSample):
        sample = sample.with_weights(np.ones(sample.n))
    return sample


def kde(x, h: float, kernel: Optional[PolyExpKernel] = None, x_eval=None, nbin: Optional[int] = None) -> DensityEstimate:
    """f(t) = sum_i K((x_i - t)/h) / (n h) with the unit-integral kernel."""
    kernel = kernel or default_kernel()
    sample = _uniform_sample(x)
    sums = fk_sum(sample, h, kernel.normalized(), x_eval=x_eval, nbin=nbin)
    density = np.maximum(sums.ksum / (sample.n * h), 0.0)
    points = sample.original_values() if x_eval is None else np.asarray(x_eval, dtype=float).ravel()
    return DensityEstimate(eval_points=points, density=density, h=h, kernel=kernel)


def kde_grid(x, h: float, kernel: Optional[PolyExpKernel] = None, grid_size: int = 512, pad: float = 10.0, nbin: Optional[int] = None) -> DensityEstimate:
    """Density on an equally spaced grid covering the data plus pad*h either side."""
    if grid_size < 2:
        raise InputError(f"grid_size must be at least 2, got {grid_size}")
    sample = _uniform_sample(x)
    grid = np.linspace(sample.values[0] - pad * h, sample.values[-1] + pad * h, grid_size)
    return kde(sample, h, kernel, x_eval=grid, nbin=nbin)


def silverman_bandwidth(x, kernel: Optional[PolyExpKernel] = None, roughness: Optional[float] = None, variance: Optional[float] = None) -> float:
    """
    h = (8 sqrt(pi) ||K||^2 / (3 sigma_K^4 n))^(1/5) * sd(x)

    roughness and variance override the kernel's own constants.
    """
    kernel = kernel or default_kernel()
    values = as_sample(x).values
    n = values.size
    if n < 2:
        raise InputError("silverman bandwidth needs at least two points")
    sd = float(np.std(values, ddof=1))
    if not sd > 0:
        raise InputError("silverman bandwidth is undefined for a sample with zero variance")
    consts = kernel_constants(kernel)
    rough = consts.roughness if roughness is None else roughness
    var = consts.variance if variance is None else variance
    return (8.0 * math.sqrt(math.pi) * rough / (3.0 * var ** 2 * n)) ** 0.2 * sd


def loo_ml_objective(h: float, x, kernel: Optional[PolyExpKernel] = None) -> float:
    """Negative leave-one-out log pseudo-likelihood."""
    kernel = (kernel or default_kernel()).normalized()
    sample = _uniform_sample(x)
    n = sample.n
    if n < 2:
        raise InputError("leave-one-out objective needs at least two points")
    sums = fk_sum(sample, h, kernel).ksum
    loo = (sums - kernel.beta0) / ((n - 1) * h)
    return float(-np.sum(np.log(np.maximum(loo, settings.DENSITY_FLOOR))))


def _regression_inputs(x, y) -> Tuple[WeightedSample, np.ndarray]:
    sample = as_sample(x)
    y = np.asarray(y, dtype=float).ravel()
    if y.size != sample.n:
        raise InputError(f"x has {sample.n} values but y has {y.size}")
    if not np.all(np.isfinite(y)):
        raise InputError("responses must be finite")
    return sample, y


def nw_regression(x, y, h: float, kernel: Optional[PolyExpKernel] = None, x_eval=None, nbin: Optional[int] = None) -> RegressionEstimate:
    """Nadaraya-Watson: sum K y / sum K."""
    kernel = kernel or default_kernel()
    sample, y = _regression_inputs(x, y)
    num = fk_sum(sample.with_weights(y), h, kernel, x_eval=x_eval, nbin=nbin).ksum
    den = fk_sum(sample.with_weights(np.ones(sample.n)), h, kernel, x_eval=x_eval, nbin=nbin).ksum
    fitted = num / np.maximum(den, settings.DENSITY_FLOOR)
    points = sample.original_values() if x_eval is None else np.asarray(x_eval, dtype=float).ravel()
    return RegressionEstimate(eval_points=points, fitted=fitted, h=h, kernel=kernel, method="nw")


def _local_moments(sample: WeightedSample, y: np.ndarray, h: float, kernel: PolyExpKernel, x_eval, nbin):
    """
    m_j = sum K (x_i - t)^j and b_j = sum K (x_i - t)^j y_i for j = 0, 1, 2
    (b_2 is not needed), recombined from sums with polynomial weights.
    """
    x = sample.original_values()
    centre = float(np.mean(x))
    xc = x - centre
    t = (x if x_eval is None else np.asarray(x_eval, dtype=float).ravel()) - centre
    s = {}
    for name, w in (("1", np.ones_like(xc)), ("x", xc), ("xx", xc * xc), ("y", y), ("xy", xc * y)):
        s[name] = fk_sum(sample.with_weights(w), h, kernel, x_eval=x_eval, nbin=nbin).ksum
    m0 = s["1"]
    m1 = s["x"] - t * s["1"]
    m2 = s["xx"] - 2.0 * t * s["x"] + t * t * s["1"]
    b0 = s["y"]
    b1 = s["xy"] - t * s["y"]
    return m0, m1, m2, b0, b1


def _loclin_ratio(m0, m1, m2, b0, b1) -> np.ndarray:
    den = m0 * m2 - m1 * m1
    floor = settings.DENSITY_FLOOR * np.maximum(m0 * m2, 1.0)
    return (m2 * b0 - m1 * b1) / np.maximum(den, floor)


def loclin_regression(x, y, h: float, kernel: Optional[PolyExpKernel] = None, x_eval=None, nbin: Optional[int] = None) -> RegressionEstimate:
    """Local-linear regression: intercept of the kernel-weighted least squares line at t."""
    kernel = kernel or default_kernel()
    sample, y = _regression_inputs(x, y)
    fitted = _loclin_ratio(*_local_moments(sample, y, h, kernel, x_eval, nbin))
    points = sample.original_values() if x_eval is None else np.asarray(x_eval, dtype=float).ravel()
    return RegressionEstimate(eval_points=points, fitted=fitted, h=h, kernel=kernel, method="loclin")


def regress(x, y, h: float, kernel: Optional[PolyExpKernel] = None, x_eval=None, method: str = "nw", nbin: Optional[int] = None) -> RegressionEstimate:
    if method == "nw":
        return nw_regression(x, y, h, kernel, x_eval, nbin)
    if method == "loclin":
        return loclin_regression(x, y, h, kernel, x_eval, nbin)
    raise InputError(f"method must be one of {REGRESSION_METHODS}, got '{method}'")


def loo_sse_objective(h: float, x, y, kernel: Optional[PolyExpKernel] = None, method: str = "nw") -> float:
    """Sum of squared leave-one-out residuals."""
    kernel = (kernel or default_kernel()).normalized()
    sample, y = _regression_inputs(x, y)
    if sample.n < 2:
        raise InputError("leave-one-out objective needs at least two points")
    b = kernel.beta0
    if method == "nw":
        num = fk_sum(sample.with_weights(y), h, kernel).ksum - b * y
        den = fk_sum(sample.with_weights(np.ones(sample.n)), h, kernel).ksum - b
        yhat = num / np.maximum(den, settings.DENSITY_FLOOR)
    elif method == "loclin":
        # only the j = 0 moments carry a self term, (x_i - x_i)^j vanishes otherwise
        m0, m1, m2, b0, b1 = _local_moments(sample, y, h, kernel, None, None)
        yhat = _loclin_ratio(m0 - b, m1, m2, b0 - b * y, b1)
    else:
        raise InputError(f"method must be one of {REGRESSION_METHODS}, got '{method}'")
    return float(np.sum((y - yhat) ** 2))


def scalar_minimize(f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-5) -> float:
    """Golden-section search on [lo, hi]; stops once the bracket is below tol*(hi - lo)."""
    if not lo < hi:
        raise InputError(f"bracket must satisfy lo < hi, got [{lo}, {hi}]")
    if not tol > 0:
        raise InputError(f"tol must be positive, got {tol}")

    def value(t: float) -> float:
        v = f(t)
        if not math.isfinite(v):
            raise NumericError(f"objective is not finite at {t}")
        return v

    a, b = lo, hi
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = value(c), value(d)
    width = tol * (hi - lo)
    while b - a > width:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = value(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = value(d)
    return 0.5 * (a + b)


def default_bracket(x) -> Tuple[float, float]:
    """[sd / n^0.2 / 20, 5 sd / n^0.2]"""
    values = as_sample(x).values
    sd = float(np.std(values, ddof=1))
    if not sd > 0:
        raise InputError("cannot build a bandwidth bracket for a sample with zero variance")
    scale = sd / values.size ** 0.2
    return scale / 20.0, 5.0 * scale


def density_bandwidth(spec: BandwidthSpec, x, kernel: Optional[PolyExpKernel] = None) -> float:
    kernel = kernel or default_kernel()
    if spec.kind == "fixed":
        return spec.value
    if spec.kind == "silverman":
        return spec.value * silverman_bandwidth(x, kernel)
    sample = _uniform_sample(x)
    lo, hi = spec.bracket or default_bracket(sample)
    h = scalar_minimize(lambda t: loo_ml_objective(t, sample, kernel), lo, hi)
    logger.info("cross-validated density bandwidth %.6g in [%.4g, %.4g]", h, lo, hi)
    return h


def regression_bandwidth(spec: BandwidthSpec, x, y, kernel: Optional[PolyExpKernel] = None, method: str = "nw") -> float:
    kernel = kernel or default_kernel()
    if spec.kind == "fixed":
        return spec.value
    if spec.kind == "silverman":
        return spec.value * silverman_bandwidth(x, kernel)
    sample = as_sample(x)
    lo, hi = spec.bracket or default_bracket(sample)
    h = scalar_minimize(lambda t: loo_sse_objective(t, sample, y, kernel, method), lo, hi)
    logger.info("cross-validated %s bandwidth %.6g in [%.4g, %.4g]", method, h, lo, hi)
    return h

"""
Poly-exponential kernels

K(x) = sum_k beta_k |x|^k exp(-|x|), beta_k >= 0, beta_0 > 0.

- pointwise evaluation of K and K'
- closed-form moment constants (integral, variance, roughness)
- the smooth sub-family beta_k = 1/k!
- a unit-variance density curve for plotting
"""

import math
from dataclasses import dataclass, field
from typing import Sequence, Tuple, Union

import numpy as np

import settings
from errors import InputError

ArrayLike = Union[float, Sequence[float], np.ndarray]

MAX_ORDER = 20
MAX_SMOOTH_ORDER = 8


@dataclass(frozen=True)
class PolyExpKernel:
    """Kernel coefficients beta_0..beta_alpha with cached derivative coefficients."""

    coefficients: Tuple[float, ...]
    gammas: Tuple[float, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        beta = tuple(float(b) for b in self.coefficients)
        if not beta:
            raise InputError("kernel needs at least one coefficient")
        if not all(math.isfinite(b) for b in beta):
            raise InputError(f"kernel coefficients must be finite, got {beta}")
        if any(b < 0 for b in beta) or beta[0] <= 0:
            raise InputError(f"kernel coefficients must be >= 0 with beta_0 > 0, got {beta}")
        if len(beta) - 1 > MAX_ORDER:
            raise InputError(f"kernel order {len(beta) - 1} exceeds the maximum of {MAX_ORDER}")
        object.__setattr__(self, "coefficients", beta)
        # K'(u) for u >= 0 is sum_k gamma_k u^k e^{-u}, gamma_k = (k+1) beta_{k+1} - beta_k
        padded = beta + (0.0,)
        gammas = tuple((k + 1) * padded[k + 1] - padded[k] for k in range(len(beta)))
        object.__setattr__(self, "gammas", gammas)

    @property
    def order(self) -> int:
        return len(self.coefficients) - 1

    @property
    def beta0(self) -> float:
        return self.coefficients[0]

    def scaled(self, factor: float) -> "PolyExpKernel":
        return PolyExpKernel(tuple(b * factor for b in self.coefficients))

    def normalized(self) -> "PolyExpKernel":
        """Same shape, rescaled to unit integral."""
        return self.scaled(1.0 / kernel_constants(self).normalizer)

    @classmethod
    def parse(cls, text: str) -> "PolyExpKernel":
        """Build a kernel from a comma separated list such as '0.25,0.25'."""
        try:
            values = tuple(float(tok) for tok in text.split(",") if tok.strip())
        except ValueError:
            raise InputError(f"could not parse kernel coefficients '{text}'") from None
        return cls(values)


@dataclass(frozen=True)
class KernelConstants:
    normalizer: float
    variance: float
    roughness: float


def default_kernel() -> PolyExpKernel:
    return PolyExpKernel(settings.DEFAULT_BETA)


def _poly_exp(coeffs: Sequence[float], a: np.ndarray) -> np.ndarray:
    # np.polyval wants the highest power first
    return np.polyval(np.asarray(coeffs[::-1]), a) * np.exp(-a)


def eval_kernel(k: PolyExpKernel, u: ArrayLike):
    """K(u); scalar in, scalar out."""
    a = np.abs(np.asarray(u, dtype=float))
    out = _poly_exp(k.coefficients, a)
    return float(out) if out.ndim == 0 else out


def eval_kernel_derivative(k: PolyExpKernel, u: ArrayLike):
    """K'(u), an odd function; K'(0) is taken as 0."""
    u = np.asarray(u, dtype=float)
    out = np.sign(u) * _poly_exp(k.gammas, np.abs(u))
    return float(out) if out.ndim == 0 else out


def kernel_constants(k: PolyExpKernel) -> KernelConstants:
    """Closed-form moments using int |x|^k e^{-|x|} dx = 2 k!."""
    if k.order > MAX_ORDER:
        raise InputError(f"kernel order {k.order} exceeds the maximum of {MAX_ORDER}")
    beta = k.coefficients
    normalizer = sum(2.0 * b * math.factorial(j) for j, b in enumerate(beta))
    unit = [b / normalizer for b in beta]
    variance = sum(2.0 * b * math.factorial(j + 2) for j, b in enumerate(unit))
    roughness = sum(
        bi * bj * math.factorial(i + j) / 2.0 ** (i + j)
        for i, bi in enumerate(unit)
        for j, bj in enumerate(unit)
    )
    return KernelConstants(normalizer=normalizer, variance=variance, roughness=roughness)


def smooth_kernel(order: int) -> PolyExpKernel:
    """beta_k = 1/k!, k = 0..order."""
    if not 0 <= order <= MAX_SMOOTH_ORDER:
        raise InputError(f"smooth kernel order must lie in [0, {MAX_SMOOTH_ORDER}], got {order}")
    return PolyExpKernel(tuple(1.0 / math.factorial(j) for j in range(order + 1)))


def kernel_curve(k: PolyExpKernel, grid_size: int = 500) -> np.ndarray:
    """
    The kernel as a unit-integral, unit-variance density on [-5, 5].

    Returns an array of shape (grid_size, 2) holding (u, density) rows.
    """
    if grid_size < 2:
        raise InputError(f"grid_size must be at least 2, got {grid_size}")
    consts = kernel_constants(k)
    sigma = math.sqrt(consts.variance)
    u = np.linspace(-5.0, 5.0, grid_size)
    density = sigma * eval_kernel(k, sigma * u) / consts.normalizer
    return np.column_stack([u, density])

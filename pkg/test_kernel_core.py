#!/usr/bin/env python3
"""Tests for poly-exponential kernels and their constants"""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from errors import InputError
from kernel_core import (
    MAX_ORDER,
    PolyExpKernel,
    default_kernel,
    eval_kernel,
    eval_kernel_derivative,
    kernel_constants,
    kernel_curve,
    smooth_kernel,
)

coefficients = st.lists(st.floats(0.0, 2.0), min_size=0, max_size=5).map(lambda tail: (0.5,) + tuple(tail))


def simpson(f, upper=60.0, n=200_000):
    """Integral of an even function over the real line."""
    u = np.linspace(0.0, upper, n + 1)
    y = f(u)
    step = upper / n
    return 2.0 * step / 3.0 * (y[0] + y[-1] + 4.0 * y[1:-1:2].sum() + 2.0 * y[2:-1:2].sum())


def test_default_kernel_constants():
    c = kernel_constants(default_kernel())
    assert c.normalizer == pytest.approx(1.0, abs=1e-12)
    assert c.variance == pytest.approx(4.0, abs=1e-12)
    assert c.roughness == pytest.approx(0.15625, abs=1e-12)


@pytest.mark.parametrize("kernel", [default_kernel(), smooth_kernel(0), smooth_kernel(3), PolyExpKernel((1.0, 0.0, 2.0))])
def test_constants_match_quadrature(kernel):
    c = kernel_constants(kernel)
    assert simpson(lambda u: eval_kernel(kernel, u)) == pytest.approx(c.normalizer, rel=1e-8)
    unit = kernel.normalized()
    assert simpson(lambda u: u * u * eval_kernel(unit, u)) == pytest.approx(c.variance, rel=1e-8)
    assert simpson(lambda u: eval_kernel(unit, u) ** 2) == pytest.approx(c.roughness, rel=1e-8)


def test_scalar_in_scalar_out():
    k = default_kernel()
    assert isinstance(eval_kernel(k, 0.3), float)
    assert isinstance(eval_kernel_derivative(k, 0.3), float)
    assert eval_kernel(k, 0.0) == pytest.approx(0.25)


@given(coefficients, st.floats(-30.0, 30.0))
def test_kernel_is_even_and_derivative_odd(beta, u):
    k = PolyExpKernel(beta)
    assert eval_kernel(k, u) == pytest.approx(eval_kernel(k, -u), rel=1e-12, abs=1e-300)
    assert eval_kernel_derivative(k, u) == pytest.approx(-eval_kernel_derivative(k, -u), rel=1e-12, abs=1e-300)
    assert eval_kernel(k, u) >= 0


@given(coefficients, st.floats(0.05, 20.0), st.sampled_from([-1.0, 1.0]))
def test_derivative_matches_finite_difference(beta, a, sign):
    k = PolyExpKernel(beta)
    u = sign * a
    eps = 1e-6
    fd = (eval_kernel(k, u + eps) - eval_kernel(k, u - eps)) / (2 * eps)
    assert eval_kernel_derivative(k, u) == pytest.approx(fd, rel=1e-5, abs=1e-8)


def test_derivative_at_zero_is_zero():
    assert eval_kernel_derivative(default_kernel(), 0.0) == 0.0
    assert eval_kernel_derivative(smooth_kernel(0), 0.0) == 0.0


def test_gammas():
    k = PolyExpKernel((1.0, 2.0, 3.0))
    assert k.gammas == (1.0, 4.0, -3.0)


@pytest.mark.parametrize("beta", [(), (0.0, 1.0), (1.0, -0.1), (math.nan,), (1.0,) * (MAX_ORDER + 2)])
def test_invalid_coefficients(beta):
    with pytest.raises(InputError):
        PolyExpKernel(beta)


def test_parse():
    assert PolyExpKernel.parse("0.25, 0.25").coefficients == (0.25, 0.25)
    with pytest.raises(InputError):
        PolyExpKernel.parse("0.25,abc")


def test_smooth_kernel():
    assert smooth_kernel(2).coefficients == (1.0, 1.0, 0.5)
    assert kernel_constants(smooth_kernel(0)).normalizer == pytest.approx(2.0)
    with pytest.raises(InputError):
        smooth_kernel(9)
    with pytest.raises(InputError):
        smooth_kernel(-1)


def test_normalized_has_unit_integral():
    k = PolyExpKernel((2.0, 1.0, 0.5)).normalized()
    assert kernel_constants(k).normalizer == pytest.approx(1.0)


@pytest.mark.parametrize("order", [0, 1, 4, 8])
def test_kernel_curve_is_unit_variance_density(order):
    curve = kernel_curve(smooth_kernel(order), grid_size=2001)
    assert curve.shape == (2001, 2)
    u, dens = curve[:, 0], curve[:, 1]
    step = u[1] - u[0]
    assert np.all(dens >= 0)
    assert np.sum(dens) * step == pytest.approx(1.0, abs=2e-2)
    assert np.sum(u * u * dens) * step == pytest.approx(1.0, abs=5e-2)
    assert dens[1000] == pytest.approx(dens.max())


def test_kernel_curve_rejects_tiny_grid():
    with pytest.raises(InputError):
        kernel_curve(default_kernel(), grid_size=1)

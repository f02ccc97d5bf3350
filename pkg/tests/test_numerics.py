import math

import numpy as np
import pytest

from pdm_ladder.errors import GridError, NonFiniteError
from pdm_ladder.numerics import (
    Grid, GridFunction, bilinear_pair, cumulative_antiderivative_sqrt_m, derivative,
    integrate, sample, sesquilinear_pair,
)
from pdm_ladder.profile import make_profile


def test_sample_values():
    g = Grid(0.0, 1.0, 5)
    np.testing.assert_array_equal(sample(lambda x: x, g).real, [0, 0.25, 0.5, 0.75, 1])
    assert sample(lambda x: np.exp(1j * x), Grid(0.0, 1.0, 5)).values[0] == 1 + 0j


def test_grid_needs_points():
    with pytest.raises(GridError):
        Grid(0.0, 1.0, 3)
    with pytest.raises(GridError):
        Grid(1.0, 0.0, 11)


def test_sample_non_finite():
    with pytest.raises(NonFiniteError) as info:
        sample(lambda x: 1 / x, Grid(-1.0, 1.0, 11))
    assert info.value.index == 5


@pytest.mark.parametrize("stencil", [2, 4])
def test_derivative_of_square_is_exact(stencil):
    g = Grid(-1.0, 2.0, 31)
    d = derivative(sample(lambda x: x ** 2, g), 1, stencil)
    np.testing.assert_allclose(d.real, 2 * g.x, atol=1e-11)


def test_derivative_of_constant_is_zero():
    g = Grid(0.0, 1.0, 21)
    assert np.max(np.abs(derivative(sample(lambda x: 3.0 + 0 * x, g), 1, 4).values)) < 1e-12


def test_second_derivative_of_sine():
    g = Grid(0.0, 2.0, 201)  # h = 1e-2
    d = derivative(sample(np.sin, g), 2, 4)
    assert np.max(np.abs(d.real + np.sin(g.x))) < 1e-7


@pytest.mark.parametrize("order", [1, 2])
@pytest.mark.parametrize("stencil", [2, 4])
def test_derivative_convergence_order(order, stencil):
    errs, hs = [], []
    for n in (41, 81, 161, 321):
        g = Grid(0.0, 2.0, n)
        d = derivative(sample(np.sin, g), order, stencil)
        exact = np.cos(g.x) if order == 1 else -np.sin(g.x)
        errs.append(np.max(np.abs(d.real - exact)))
        hs.append(g.h)
    slope = np.polyfit(np.log(hs), np.log(errs), 1)[0]
    assert abs(slope - stencil) < 0.3


def test_antiderivative_constant_mass():
    prof = make_profile("1", (-3.0, 3.0))
    g = Grid(-3.0, 3.0, 61)
    F = cumulative_antiderivative_sqrt_m(prof, g, 0.0)
    np.testing.assert_allclose(F, g.x, atol=1e-13)


def test_antiderivative_quadratic():
    prof = make_profile("1 + x^2", (-4.0, 4.0))
    g = Grid(-4.0, 4.0, 401)
    F = cumulative_antiderivative_sqrt_m(prof, g, 0.0)
    i = int(np.argmin(np.abs(g.x - 2.0)))
    assert F[i] == pytest.approx(0.5 * (2 * math.sqrt(5) + math.asinh(2)), abs=1e-12)
    assert F[i] == pytest.approx(2.957886, abs=1e-6)
    assert F[200] == 0.0
    assert np.all(np.diff(F) > 0)


def test_antiderivative_exponential_off_node_anchor():
    prof = make_profile("exp(-x)", (-1.0, 3.0))
    g = Grid(-1.0, 3.0, 41)
    F = cumulative_antiderivative_sqrt_m(prof, g, 0.05)
    exact = 2 * (np.exp(-0.025) - np.exp(-g.x / 2))
    np.testing.assert_allclose(F, exact, atol=1e-13)


@pytest.mark.parametrize("a, b, n, f, expected, tol", [
    (0.0, 2.0, 11, lambda x: 1 + 0 * x, 2.0, 1e-14),
    (0.0, 1.0, 101, lambda x: x ** 2, 1 / 3, 1e-10),
    (0.0, 1.0, 100, lambda x: x ** 3, 1 / 4, 1e-10),  # odd interval count
    (-8.0, 8.0, 2001, lambda x: np.exp(-x ** 2), math.sqrt(math.pi), 1e-10),
])
def test_integrate(a, b, n, f, expected, tol):
    assert abs(integrate(sample(f, Grid(a, b, n))) - expected) < tol


def test_integrate_is_linear():
    g = Grid(-1.0, 1.0, 101)
    f, h = sample(np.cos, g), sample(lambda x: np.exp(1j * x), g)
    lhs = integrate(2.5 * f + (1 - 3j) * h)
    assert abs(lhs - (2.5 * integrate(f) + (1 - 3j) * integrate(h))) < 1e-14


def test_pairings():
    g = Grid(-8.0, 8.0, 2001)
    gauss = sample(lambda x: np.exp(-x ** 2 / 2), g)
    odd = sample(lambda x: x * np.exp(-x ** 2 / 2), g)
    assert abs(bilinear_pair(gauss, gauss) - math.sqrt(math.pi)) < 1e-9
    assert abs(bilinear_pair(gauss, odd)) < 1e-12
    tw = sample(lambda x: np.exp(1j * x - x ** 2 / 2), g)
    assert abs(sesquilinear_pair(tw, tw) - math.sqrt(math.pi)) < 1e-9
    assert abs(bilinear_pair(tw, tw) - math.sqrt(math.pi) * math.exp(-1)) < 1e-9

    p = Grid(-math.pi, math.pi, 401)
    assert abs(bilinear_pair(sample(np.cos, p), sample(np.sin, p))) < 1e-10
    c = Grid(0.0, 2 * math.pi, 401)
    e = sample(lambda x: np.exp(1j * x), c)
    assert sesquilinear_pair(e, e) == pytest.approx(2 * math.pi, abs=1e-12)


def test_real_pairings_agree_and_self_pairing_nonnegative():
    g = Grid(0.0, 1.0, 51)
    f, h = sample(np.sin, g), sample(np.exp, g)
    assert sesquilinear_pair(f, h) == bilinear_pair(f, h)
    z = GridFunction(g, np.exp(3j * g.x) * (1 + g.x))
    s = sesquilinear_pair(z, z)
    assert s.real > 0 and abs(s.imag) < 1e-16


def test_mismatched_grids():
    with pytest.raises(GridError):
        bilinear_pair(sample(np.sin, Grid(0, 1, 11)), sample(np.sin, Grid(0, 1, 13)))

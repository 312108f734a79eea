import numpy as np
import pytest

from phasecov.numerics import cumulative_simpson, derivative, integrating_factor_integral, interior


def grid(n, t_max=2.0):
    t = np.linspace(0.0, t_max, n)
    return t, t[1] - t[0]


def test_simpson_exact_for_cubics():
    t, h = grid(21)
    y = 1 - 2 * t + 3 * t**2 - 0.5 * t**3
    exact = t - t**2 + t**3 - t**4 / 8
    assert np.allclose(cumulative_simpson(y, h), exact, atol=1e-13)


def test_simpson_three_points():
    t, h = grid(3)
    assert np.allclose(cumulative_simpson(t**2, h), t**3 / 3, atol=1e-14)


@pytest.mark.parametrize("n", [2, 4, 100])
def test_simpson_rejects_even_grids(n):
    with pytest.raises(ValueError):
        cumulative_simpson(np.ones(n), 0.1)


def test_simpson_fourth_order_convergence():
    errors = []
    for n in (41, 81, 161):
        t, h = grid(n)
        errors.append(np.max(np.abs(cumulative_simpson(np.cos(3 * t), h) - np.sin(3 * t) / 3)))
    ratios = np.array(errors[:-1]) / np.array(errors[1:])
    assert np.all(ratios > 12)


def test_simpson_no_odd_even_sawtooth():
    t, h = grid(401, 10.0)
    err = cumulative_simpson(np.exp(-2 * t), h) - (1 - np.exp(-2 * t)) / 2
    # node-to-node jumps stay below the quadrature error itself
    assert np.max(np.abs(np.diff(err))) < 0.25 * np.max(np.abs(err))


def test_integrating_factor_against_closed_form():
    # exp(-G) int_0^t f e^G with f = 1, G = a t gives (1 - e^{-a t}) / a
    t, h = grid(2001, 10.0)
    for a in (0.5, 3.0, 10.0):
        out = integrating_factor_integral(np.ones_like(t), a * t, h)
        assert np.max(np.abs(out - -np.expm1(-a * t) / a)) < 1e-6


def test_integrating_factor_no_overflow():
    t, h = grid(101, 10.0)
    # a constant offset cancels exactly but overflows exp(G) if taken literally
    out = integrating_factor_integral(np.ones_like(t), 1e3 + t, h)
    assert np.all(np.isfinite(out))
    assert np.allclose(out, -np.expm1(-t), atol=1e-6)


def test_integrating_factor_matches_plain_simpson_when_g_vanishes():
    t, h = grid(51)
    f = np.sin(t)
    assert np.allclose(integrating_factor_integral(f, np.zeros_like(t), h), cumulative_simpson(f, h))


def test_derivative_exact_for_low_degree():
    t, h = grid(11)
    y = 2 + 3 * t - t**2
    assert np.allclose(derivative(y, h), 3 - 2 * t, atol=1e-12)
    y = t**4
    assert np.allclose(derivative(y, h)[interior(11)], 4 * t[interior(11)] ** 3, atol=1e-11)


def test_derivative_orders():
    inner, edge = [], []
    for n in (51, 101, 201):
        t, h = grid(n)
        err = np.abs(derivative(np.sin(t), h) - np.cos(t))
        inner.append(err[interior(n)].max())
        edge.append(err.max())
    assert inner[0] / inner[1] > 14
    assert edge[0] / edge[1] > 3.5


def test_derivative_minimum_size():
    with pytest.raises(ValueError):
        derivative([1.0, 2.0], 0.1)
    assert np.allclose(derivative([0.0, 1.0, 2.0], 1.0), 1.0)


def test_interior_slice():
    assert interior(10) == slice(2, 8)

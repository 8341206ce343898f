from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hmt.grid import (
    Grading,
    GridError,
    RadialFunction,
    RadialGrid,
    build_grid,
    derivative_at,
    differentiate,
    extrapolate_origin,
    geometric_grid,
    hat_pairings,
    power_weights,
    integrate,
    value_at,
)


def test_area_of_disc():
    g = build_grid(64)
    assert math.isclose(math.fsum(g.weights.tolist()), math.pi, rel_tol=1e-10)
    assert math.isclose(integrate(lambda r: np.ones_like(r), g), math.pi, rel_tol=1e-12)


def test_nodes_and_weights_invariants():
    g = build_grid(128)
    assert g.nodes[0] > 0.0 and g.nodes[-1] < 1.0
    assert np.all(np.diff(g.nodes) > 0.0)
    assert np.all(g.weights > 0.0)


def test_singular_weight_integral():
    g = build_grid(512)
    assert abs(integrate(lambda r: 1.0 / r, g) - 2.0 * math.pi) < 1e-6


def test_polynomial_and_rim_integrals():
    g = build_grid(256)
    assert math.isclose(integrate(lambda r: r * r, g), math.pi / 2.0, rel_tol=1e-12)
    trunc = lambda r: np.where(r <= 0.9, 1.0 / (1.0 - r * r) ** 2, 0.0)
    exact = math.pi * (1.0 / (1.0 - 0.81) - 1.0)
    # the cut at 0.9 is not a breakpoint, so the rule is only first order here
    assert abs(integrate(trunc, build_grid(4096)) - exact) / exact < 1e-2


def test_truncated_rim_integral_on_aligned_grid():
    x = np.concatenate((build_grid(256).breakpoints * 0.9, [1.0]))
    g = RadialGrid.from_breakpoints(x)
    trunc = lambda r: np.where(r <= 0.9, 1.0 / (1.0 - r * r) ** 2, 0.0)
    assert math.isclose(integrate(trunc, g), math.pi * (1.0 / 0.19 - 1.0), rel_tol=1e-10)


@pytest.mark.parametrize("beta", [0.0, 0.25, 0.5, 0.75, 0.9])
def test_weighted_area_converges_monotonically(beta):
    exact = math.pi / (1.0 - beta)
    errs = [abs(integrate(lambda r: r ** (-2.0 * beta), build_grid(n)) - exact) for n in (32, 64, 128, 256)]
    for a, b in zip(errs, errs[1:]):
        assert b <= a or b < 1e-12


@pytest.mark.parametrize("beta", [0.0, 0.25, 0.5, 0.75])
def test_quadrature_convergence_against_refined_oracle(beta):
    f = lambda r: r ** (-2.0 * beta) / (1.0 + r)
    oracle = integrate(f, build_grid(4096))
    errs = [abs(integrate(f, build_grid(n)) - oracle) for n in (32, 64, 128)]
    assert errs[1] <= errs[0] and errs[2] <= errs[1] or errs[2] < 1e-12


def test_build_grid_errors():
    with pytest.raises(GridError):
        build_grid(12)
    with pytest.raises(GridError):
        build_grid(66)
    with pytest.raises(GridError):
        build_grid(64, Grading(0.5, 3.0))
    with pytest.raises(GridError):
        Grading(3.0, 9.0)


def test_grid_is_deterministic():
    a, b = build_grid(256), build_grid(256)
    assert a.nodes.tobytes() == b.nodes.tobytes()
    assert a.weights.tobytes() == b.weights.tobytes()


def test_grid_is_immutable():
    g = build_grid(64)
    with pytest.raises(ValueError):
        g.nodes[0] = 0.5


def test_derivative_of_polynomials():
    g = build_grid(64)
    sq = RadialFunction.from_callable(g, lambda r: r * r)
    assert abs(derivative_at(sq, 0.5) - 1.0) < 1e-12
    assert np.allclose(differentiate(sq).values, 2.0 * g.nodes, atol=1e-10)
    const = RadialFunction.from_callable(g, lambda r: 3.0 + 0.0 * r)
    assert np.allclose(differentiate(const).values, 0.0, atol=1e-9)
    rim = RadialFunction.from_callable(g, lambda r: 1.0 - r * r)
    assert np.allclose(differentiate(rim).values, -2.0 * g.nodes, atol=1e-10)


def test_value_at():
    g = build_grid(64)
    sq = RadialFunction.from_callable(g, lambda r: r * r)
    assert abs(value_at(sq, 0.5) - 0.25) < 1e-14
    assert abs(value_at(sq, 0.0)) < 1e-14
    rim = RadialFunction.from_callable(g, lambda r: 1.0 - r * r)
    assert abs(value_at(rim, 0.0) - 1.0) < 1e-14
    assert rim.origin_value == value_at(rim, 0.0)
    with pytest.raises(GridError):
        value_at(rim, 1.0)
    with pytest.raises(GridError):
        value_at(rim, -0.1)


def test_interpolation_order_four():
    f = lambda r: np.cos(3.0 * r)
    errs = []
    for n in (64, 128):
        g = build_grid(n, Grading(1.0, 1.0))
        u = RadialFunction.from_callable(g, f)
        x = np.linspace(0.01, 0.99, 97)
        errs.append(np.max(np.abs(value_at(u, x) - f(x))))
    assert errs[0] / errs[1] > 12.0


def test_origin_extrapolation_rules_agree_on_cubics():
    g = build_grid(64)
    vals = 1.0 + g.nodes - 2.0 * g.nodes**3
    assert abs(extrapolate_origin(g, vals, 4) - 1.0) < 1e-10
    assert abs(extrapolate_origin(g, vals, 6) - 1.0) < 1e-8


def test_function_validation():
    g = build_grid(16)
    with pytest.raises(GridError):
        RadialFunction(g, np.zeros(15))
    vals = np.zeros(16)
    vals[3] = np.nan
    with pytest.raises(GridError):
        RadialFunction(g, vals)
    with pytest.raises(GridError):
        integrate(RadialFunction(g, np.zeros(16)), build_grid(32))


def test_integration_by_parts():
    g = build_grid(512)
    bump = lambda r: np.where((r > 0.2) & (r < 0.8), ((r - 0.2) * (0.8 - r)) ** 4, 0.0)
    u = RadialFunction.from_callable(g, lambda r: np.sin(2.0 * r) * bump(r))
    v = RadialFunction.from_callable(g, lambda r: np.cos(r) * bump(r))
    du = differentiate(u)
    ddu = differentiate(du)
    lhs = integrate(du.values * differentiate(v).values, g)
    rhs = integrate((ddu.values + du.values / g.nodes) * v.values, g)
    assert abs(lhs + rhs) < 1e-8


def test_geometric_grid_and_hats():
    g = geometric_grid(1e-6, 100.0, 256)
    assert g.radius == 100.0
    assert math.isclose(integrate(lambda r: np.exp(-r), g), 2.0 * math.pi, rel_tol=1e-8)
    x, stiff, load = hat_pairings(g, np.zeros(g.n), np.ones(g.n), 1.0, 10.0)
    assert np.all((x > 1.0) & (x < 10.0))
    # hats integrate to their area: positive loads, zero stiffness for zero flux
    assert np.all(load > 0.0) and np.all(stiff == 0.0)


@given(
    a=st.floats(-5, 5, allow_nan=False),
    b=st.floats(-5, 5, allow_nan=False),
    k=st.integers(0, 5),
)
def test_integrate_is_linear(a, b, k):
    g = build_grid(64)
    f = g.nodes**k
    h = np.cos(g.nodes)
    lhs = integrate(a * f + b * h, g)
    rhs = a * integrate(f, g) + b * integrate(h, g)
    assert abs(lhs - rhs) <= 1e-12 * (1.0 + abs(a) + abs(b)) * 10.0


@given(c=st.floats(-3, 3, allow_nan=False), d=st.floats(-3, 3, allow_nan=False), r=st.floats(0.0, 0.999))
def test_value_at_exact_on_cubics(c, d, r):
    g = build_grid(32)
    u = RadialFunction.from_callable(g, lambda x: c + d * x**3)
    assert abs(value_at(u, r) - (c + d * r**3)) < 1e-11


@pytest.mark.parametrize("beta", [0.0, 0.25, 0.5, 0.75, 0.95])
def test_power_weights_singular_mass(beta):
    g = build_grid(128)
    w = power_weights(g, -2.0 * beta)
    exact = math.pi / (1.0 - beta)
    assert abs(math.fsum(w.tolist()) - exact) / exact < 1e-8


def test_power_weights_exact_for_polynomials_near_origin():
    g = build_grid(64)
    w = power_weights(g, -1.5)
    # int |x|^(-1.5) r^2 dx over the disc = 2 pi / 2.5
    assert math.fsum((w * g.nodes**2).tolist()) == pytest.approx(2.0 * math.pi / 2.5, rel=1e-8)
    assert np.array_equal(power_weights(g, 0.0), g.weights)
    with pytest.raises(GridError):
        power_weights(g, -2.0)

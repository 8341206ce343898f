from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import jn_zeros

from hmt.grid import RadialFunction, build_grid
from hmt.norms import (
    DomainError,
    dirichlet_energy,
    first_eigenvalue,
    first_eigenvalue_beta,
    halpha_norm_sq,
    hardy_norm_sq,
    l2_norm_sq,
    l2beta_norm_sq,
    norm_report,
    rim_potential_energy,
)

J01_SQ = float(jn_zeros(0, 1)[0] ** 2)


def fn(grid, f):
    return RadialFunction.from_callable(grid, f)


def test_zero_function(grid512):
    z = fn(grid512, lambda r: 0.0 * r)
    assert hardy_norm_sq(z) == 0.0
    assert halpha_norm_sq(z, 1.3) == 0.0
    assert l2beta_norm_sq(z, 0.5) == 0.0


def test_hardy_norm_closed_forms(grid512):
    assert abs(hardy_norm_sq(fn(grid512, lambda r: 1.0 - r * r)) - math.pi) < 1e-6 * math.pi
    # Dirichlet part 4 pi / 3, potential part pi / 3
    u2 = fn(grid512, lambda r: (1.0 - r * r) ** 2)
    assert abs(dirichlet_energy(u2) - 4.0 * math.pi / 3.0) < 1e-6
    assert abs(rim_potential_energy(u2) - math.pi / 3.0) < 1e-8
    assert abs(hardy_norm_sq(u2) - math.pi) < 1e-6 * math.pi


def test_halpha_closed_forms(grid512):
    u = fn(grid512, lambda r: 1.0 - r * r)
    assert abs(halpha_norm_sq(u, 0.0) - math.pi) < 1e-6 * math.pi
    assert abs(halpha_norm_sq(u, 1.0) - 2.0 * math.pi / 3.0) < 1e-6 * math.pi
    assert abs(l2_norm_sq(u) - math.pi / 3.0) < 1e-12
    with pytest.raises(ValueError):
        halpha_norm_sq(u, -1.0)


def test_l2beta(grid512):
    one = fn(grid512, lambda r: np.ones_like(r))
    assert abs(l2beta_norm_sq(one, 0.0) - math.pi) < 1e-10
    assert abs(l2beta_norm_sq(one, 0.5) - 2.0 * math.pi) < 1e-6
    with pytest.raises(ValueError):
        l2beta_norm_sq(one, 1.0)


def test_report_identities(grid512):
    u = fn(grid512, lambda r: (1.0 - r * r) * np.cos(r))
    rep = norm_report(u, alpha=0.7, beta=0.25)
    # for profiles vanishing linearly at the rim the ground-state form equals the raw difference
    assert abs(rep.closure_gap) < 1e-6 * rep.dirichlet
    assert rep.halpha_sq == pytest.approx(rep.hardy_sq - 0.7 * rep.l2_sq, abs=1e-14)


def test_ground_state_form_on_half_power_profiles(grid512):
    # u = sqrt(1 - r^2) is in the completed space; the raw difference diverges but the form is pi
    u = fn(grid512, lambda r: np.sqrt(1.0 - r * r))
    assert abs(hardy_norm_sq(u) - math.pi) < 1e-10
    assert rim_potential_energy(u) > 10.0


def test_non_decaying_input_is_a_domain_error(grid512):
    with pytest.raises(DomainError):
        hardy_norm_sq(fn(grid512, lambda r: np.ones_like(r)))


def test_closed_form_convergence():
    errs = []
    for n in (256, 1024):
        u = fn(build_grid(n), lambda r: 1.0 - r * r)
        errs.append(abs(hardy_norm_sq(u) - math.pi))
    assert errs[1] < errs[0] / 50.0


def test_discrete_hardy_positivity_random(grid512):
    rng = np.random.default_rng(7)
    for _ in range(20):
        coef = rng.normal(size=4)
        u = fn(grid512, lambda r: np.polynomial.polynomial.polyval(r, coef) * np.clip(0.9025 - r * r, 0, None) ** 3)
        assert hardy_norm_sq(u) >= -1e-8 * dirichlet_energy(u)


def test_eigenvalues(grid512):
    lap = first_eigenvalue(grid512, "laplacian")
    assert abs(lap - J01_SQ) / J01_SQ < 1e-3
    b0 = first_eigenvalue_beta(0.0, grid512)
    assert abs(b0 - lap) < 1e-9 * lap
    h = first_eigenvalue(grid512, "hardy")
    assert h > 0.0
    assert abs(first_eigenvalue(build_grid(1024), "hardy") - h) / h < 1e-2


def test_weighted_eigenvalue_grid_stable(grid512):
    a = first_eigenvalue_beta(0.5, grid512)
    b = first_eigenvalue_beta(0.5, build_grid(1024))
    assert a > 0.0 and abs(a - b) / b < 1e-2


def test_eigen_mode_validation(grid512):
    with pytest.raises(ValueError):
        first_eigenvalue(grid512, "dirichlet")
    with pytest.raises(ValueError):
        first_eigenvalue_beta(1.0, grid512)


@pytest.mark.parametrize("q,s", [(1.0, 0.0), (2.0, 1.0), (0.75, -0.3), (3.0, 2.0)])
def test_rayleigh_quotients_bounded_below(grid512, q, s):
    lam = first_eigenvalue(grid512, "hardy")
    u = fn(grid512, lambda r: (1.0 - r * r) ** q * (1.0 + s * r * r))
    assert hardy_norm_sq(u) / l2_norm_sq(u) >= lam - 1e-8


@given(t=st.floats(-20, 20, allow_nan=False).filter(lambda t: abs(t) > 1e-3), q=st.floats(0.75, 3.0))
def test_homogeneity(t, q):
    g = build_grid(128)
    u = fn(g, lambda r: (1.0 - r * r) ** q * np.exp(-r))
    for f in (hardy_norm_sq, l2_norm_sq, dirichlet_energy, lambda w: halpha_norm_sq(w, 0.9), lambda w: l2beta_norm_sq(w, 0.3)):
        assert f(u * t) == pytest.approx(t * t * f(u), rel=1e-12)


@given(a=st.floats(0.0, 1.8), da=st.floats(1e-3, 1.0))
def test_halpha_strictly_decreasing(a, da):
    g = build_grid(128)
    u = fn(g, lambda r: (1.0 - r * r) * (1.0 + r))
    assert halpha_norm_sq(u, a + da) < halpha_norm_sq(u, a)

from __future__ import annotations

import math

import numpy as np
import pytest

from hmt import functional
from hmt.acceptance import brute_force_oracle
from hmt.functional import ProblemParams, el_residual, lambda_eps, mt_functional
from hmt.norms import halpha_norm_sq
from hmt.solver import (
    ALPHA_MARGIN,
    FailedPoint,
    SolverConfig,
    SolverError,
    hardy_lambda1,
    maximize_subcritical,
    sweep_epsilon,
)


def check_invariants(res, slack=1e-10):
    p = res.params
    u = res.u_eps.values
    assert abs(halpha_norm_sq(res.u_eps, p.alpha) - 1.0) <= 1e-8
    assert np.all(u >= -slack)
    assert np.all(np.diff(u) <= slack)
    assert res.c_eps >= u.max() - slack
    assert res.f_value >= math.pi / (1.0 - p.beta)
    assert res.f_value == pytest.approx(mt_functional(res.u_eps, p), rel=1e-14)
    assert res.lambda_eps == pytest.approx(lambda_eps(res.u_eps, p), rel=1e-14)


def test_config_validation():
    for kw in ({"tol": 0.0}, {"max_iter": 0}, {"initial": "flat"}, {"backtrack": -1}):
        with pytest.raises(ValueError):
            SolverConfig(**kw)


def test_reference_maximizer(maximizer):
    assert maximizer.converged
    check_invariants(maximizer)
    assert maximizer.residual < 1e-6
    assert maximizer.f_value > 2.0 * math.pi


def test_eps_04_against_oracle():
    p = ProblemParams(0.5, 0.0, 0.4)
    res = maximize_subcritical(p)
    assert res.converged and res.residual < 1e-6
    check_invariants(res)
    oracle, _ = brute_force_oracle(p)
    assert res.f_value >= oracle - 1e-6


def test_deterministic():
    p = ProblemParams(0.0, 0.0, 0.5)
    a = maximize_subcritical(p)
    b = maximize_subcritical(p)
    assert a.f_value == b.f_value and a.iterations == b.iterations
    assert np.array_equal(a.u_eps.values, b.u_eps.values)


def test_positive_alpha_and_initial_profile_independence(lambda1):
    p = ProblemParams(0.25, 0.5 * lambda1, 0.3)
    a = maximize_subcritical(p, SolverConfig(initial="bump"))
    b = maximize_subcritical(p, SolverConfig(initial="peaked"))
    assert a.converged and b.converged
    check_invariants(a)
    assert a.f_value == pytest.approx(b.f_value, rel=1e-8)


def test_el_consistency(maximizer):
    p = maximizer.params
    # pairing the equation with u itself: ||u||^2 = mu * lambda_eps(u)
    mu = halpha_norm_sq(maximizer.u_eps, p.alpha) / lambda_eps(maximizer.u_eps, p)
    assert mu == pytest.approx(1.0 / maximizer.lambda_eps, rel=1e-8)
    assert el_residual(maximizer.u_eps, maximizer.lambda_eps, p) == pytest.approx(maximizer.residual)


def test_grid_stability(maximizer):
    fine = maximize_subcritical(maximizer.params, SolverConfig(n=1024))
    assert abs(fine.f_value - maximizer.f_value) / fine.f_value < 1e-4


def test_alpha_refusal():
    lam1 = hardy_lambda1()
    with pytest.raises(SolverError, match="lambda_1"):
        maximize_subcritical(ProblemParams(0.0, ALPHA_MARGIN * lam1, 0.3))
    with pytest.raises(SolverError):
        maximize_subcritical(ProblemParams(0.0, 0.0, 0.0))


def test_overflow_becomes_solver_error(monkeypatch):
    # desk-scale maximizers stay far below the cap, so lower it
    monkeypatch.setattr(functional, "LOG_CAP", -3.0)
    with pytest.raises(SolverError, match="refine"):
        maximize_subcritical(ProblemParams(0.0, 0.0, 0.3))


def test_non_convergence_returns_best_iterate():
    res = maximize_subcritical(ProblemParams(0.5, 0.0, 0.2), SolverConfig(max_iter=2))
    assert not res.converged and res.iterations == 2
    assert abs(halpha_norm_sq(res.u_eps, 0.0) - 1.0) <= 1e-8


def test_sweep_monotone_and_continuation():
    rs = sweep_epsilon(ProblemParams(0.5, 0.0), [0.4, 0.3, 0.2])
    assert all(r.converged for r in rs)
    fs = [r.f_value for r in rs]
    cs = [r.c_eps for r in rs]
    assert all(b >= a - 1e-8 for a, b in zip(fs, fs[1:]))
    assert all(b >= a for a, b in zip(cs, cs[1:]))


def test_single_element_sweep_matches_direct_call():
    p = ProblemParams(0.5, 0.0, 0.4)
    (r,) = sweep_epsilon(ProblemParams(0.5, 0.0), [0.4])
    d = maximize_subcritical(p)
    assert r.f_value == d.f_value
    assert np.array_equal(r.u_eps.values, d.u_eps.values)


def test_sweep_validation_and_failures():
    with pytest.raises(ValueError):
        sweep_epsilon(ProblemParams(0.5, 0.0), [0.2, 0.3])
    with pytest.raises(ValueError):
        sweep_epsilon(ProblemParams(0.5, 0.0), [0.6])
    (ok,) = sweep_epsilon(ProblemParams(0.0, 0.0), [0.5], SolverConfig(n=64))
    assert ok.converged


def test_sweep_marks_failures_and_continues(monkeypatch):
    # on 64 nodes the largest log term is about 0.002 at eps = 0.5 and 2.1 at eps = 0.1
    monkeypatch.setattr(functional, "LOG_CAP", 1.0)
    rs = sweep_epsilon(ProblemParams(0.0, 0.0), [0.5, 0.1], SolverConfig(n=64))
    assert rs[0].converged
    assert isinstance(rs[1], FailedPoint) and "refine" in rs[1].error

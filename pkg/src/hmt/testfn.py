"""The glued bubble/Green test functions and the strict-inequality check.

For small ``eps`` the profile is a truncated bubble of scale ``eps`` on
``B_{R eps}`` and ``G / c`` outside, with ``R = (-log eps)^(1/(1 - beta))``.
The constants are the leading terms of their expansions,

    b   = 1 / (4 pi (1 - beta)),
    c^2 = -log(eps) / (2 pi) + A0 + b log(pi / (1 - beta)) - b,

and the remainders are measured rather than assumed: the mismatch of the
two pieces at ``r = R eps`` and the deviation of the norm from 1 are
reported alongside every evaluation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Protocol

import numpy as np
from scipy.special import logsumexp

from .blowup import bubble_kappa
from .grid import RadialFunction, RadialGrid, differentiate, power_weights
from .norms import halpha_norm_sq

TWO_PI = 2.0 * math.pi
MATCH_LIMIT = 0.5
NORM_SLACK = 1e-3


class TestFunctionError(ValueError):
    """The requested test function does not fit in the disc."""

    __test__ = False


class GreenLike(Protocol):
    a0: float

    def evaluate(self, r) -> np.ndarray: ...


@dataclass(frozen=True)
class PoleOnly:
    """``-log(r) / 2 pi + a0``: the Green function with its regular part dropped."""

    a0: float

    def evaluate(self, r) -> np.ndarray:
        return -np.log(np.asarray(r, dtype=float)) / TWO_PI + self.a0


@dataclass(frozen=True)
class TestFunctionParams:
    __test__ = False  # not a pytest class

    eps: float
    beta: float
    alpha: float
    R: float
    b: float
    c_sq: float
    a0: float
    matching_residual: float

    @property
    def c(self) -> float:
        return math.sqrt(self.c_sq)

    @property
    def r_match(self) -> float:
        return self.R * self.eps

    @property
    def T(self) -> float:
        """``pi / (1 - beta) * R^(2 - 2 beta)``, the bubble argument at the matching radius."""
        return bubble_kappa(self.beta) * self.R ** (2.0 - 2.0 * self.beta)

    @property
    def remainder_scale(self) -> float:
        """``R^(2 beta - 2)``, the size of the dropped terms."""
        return self.R ** (2.0 * self.beta - 2.0)


def family_constants(eps: float, beta: float, alpha: float, a0: float) -> tuple[float, float, float]:
    """``(R, b, c^2)`` for the given scale and Green constant."""
    if not 0.0 < eps < 1.0:
        raise TestFunctionError(f"eps must lie in (0, 1), got {eps}")
    if not 0.0 <= beta < 1.0:
        raise TestFunctionError(f"beta must lie in [0, 1), got {beta}")
    R = (-math.log(eps)) ** (1.0 / (1.0 - beta))
    b = 1.0 / (4.0 * math.pi * (1.0 - beta))
    c_sq = -math.log(eps) / TWO_PI + a0 + b * math.log(bubble_kappa(beta)) - b
    return R, b, c_sq


def _inner(r: np.ndarray, eps: float, beta: float, b: float, c: float) -> np.ndarray:
    t = bubble_kappa(beta) * (r / eps) ** (2.0 - 2.0 * beta)
    return c + (-np.log1p(t) / (4.0 * math.pi * (1.0 - beta)) + b) / c


def testfn_grid(r_match: float, n: int = 2048) -> RadialGrid:
    """Grid with a breakpoint at the matching radius.

    Geometric elements resolve the bubble on ``(0, r_match)`` and the
    logarithm on ``(r_match, r_match + 1/4)``; the remaining elements are
    clustered cubically toward the rim.
    """
    if n < 64 or n % 16:
        raise TestFunctionError(f"node count must be a multiple of 16 and >= 64, got {n}")
    m = n // 4
    m_in, m_mid = (5 * m) // 16, (5 * m) // 16
    m_out = m - m_in - m_mid
    if not 0.0 < r_match < MATCH_LIMIT:
        raise TestFunctionError(f"matching radius {r_match} must lie in (0, {MATCH_LIMIT})")
    mid_end = r_match + 0.25
    inner = np.geomspace(r_match * 1e-8, r_match, m_in)
    mid = np.geomspace(r_match, mid_end, m_mid + 1)[1:]
    t = np.linspace(0.0, 1.0, m_out + 1)[1:]
    outer = mid_end + (1.0 - mid_end) * (1.0 - (1.0 - t) ** 3)
    x = np.concatenate(([0.0], inner, mid, outer))
    x[m_in] = r_match
    x[-1] = 1.0
    return RadialGrid.from_breakpoints(x)


def build_test_function(
    eps: float,
    beta: float,
    alpha: float,
    g: GreenLike,
    n: int = 2048,
) -> tuple[TestFunctionParams, RadialFunction]:
    """Assemble the two-piece profile on its own grid.

    ``g`` supplies the outer piece (``g.evaluate``) and the constant ``g.a0``.
    """
    R, b, c_sq = family_constants(eps, beta, alpha, g.a0)
    r_match = R * eps
    if not r_match < MATCH_LIMIT:
        raise TestFunctionError(f"R eps = {r_match:.4g} must be below {MATCH_LIMIT}; take eps smaller")
    if not c_sq > 0.0:
        raise TestFunctionError(f"c^2 = {c_sq:.4g} is not positive; take eps smaller")
    c = math.sqrt(c_sq)
    grid = testfn_grid(r_match, n)
    r = grid.nodes
    inside = r < r_match
    vals = np.empty_like(r)
    vals[inside] = _inner(r[inside], eps, beta, b, c)
    vals[~inside] = np.asarray(g.evaluate(r[~inside]), dtype=float) / c
    inner_edge = float(_inner(np.array([r_match]), eps, beta, b, c)[0])
    outer_edge = float(np.asarray(g.evaluate(np.array([r_match])), dtype=float)[0]) / c
    tp = TestFunctionParams(
        eps=eps,
        beta=beta,
        alpha=alpha,
        R=R,
        b=b,
        c_sq=c_sq,
        a0=g.a0,
        matching_residual=abs(inner_edge - outer_edge),
    )
    return tp, RadialFunction(grid, vals)


def testfn_norm(phi: RadialFunction, tp: TestFunctionParams) -> float:
    """``||phi||_{H,alpha}^2`` by quadrature.

    The elementwise rule does not see the (small) jump at the matching
    radius, so this is the norm of the two pieces glued without it.
    """
    return halpha_norm_sq(phi, tp.alpha)


def inner_dirichlet(phi: RadialFunction, tp: TestFunctionParams) -> float:
    """``int_{B_{R eps}} |grad phi|^2`` by quadrature."""
    grid = phi.grid
    inside = grid.nodes < tp.r_match
    d = differentiate(phi).values
    return math.fsum((grid.weights[inside] * d[inside] ** 2).tolist())


def inner_dirichlet_closed_form(tp: TestFunctionParams, exact: bool = False) -> float:
    """Inner Dirichlet energy of the bubble piece.

    ``exact=False`` gives the leading expansion
    ``(log(pi/(1-beta)) + log R^(2-2beta) - 1) / (4 pi (1-beta) c^2)``;
    ``exact=True`` the full value ``(log(1+T) + 1/(1+T) - 1) / (4 pi (1-beta) c^2)``.
    """
    pref = 1.0 / (4.0 * math.pi * (1.0 - tp.beta) * tp.c_sq)
    if exact:
        T = tp.T
        return pref * (math.log1p(T) + 1.0 / (1.0 + T) - 1.0)
    return pref * (math.log(bubble_kappa(tp.beta)) + (2.0 - 2.0 * tp.beta) * math.log(tp.R) - 1.0)


@dataclass(frozen=True)
class FunctionalSplit:
    inner: float
    outer: float
    log_inner: float

    @property
    def total(self) -> float:
        return self.inner + self.outer


def testfn_functional(phi: RadialFunction, tp: TestFunctionParams) -> FunctionalSplit:
    """``int |x|^(-2 beta) exp(4 pi (1 - beta) phi^2)`` split at the matching radius.

    Terms are summed in log space; the inner total is also returned as a log
    so that it survives when the float range is exceeded.
    """
    grid = phi.grid
    r = grid.nodes
    weights = power_weights(grid, -2.0 * tp.beta)
    logs = np.log(np.abs(weights)) + 4.0 * math.pi * (1.0 - tp.beta) * phi.values**2
    sign = np.sign(weights)
    inside = r < tp.r_match
    log_inner = float(logsumexp(logs[inside], b=sign[inside]))
    inner = math.exp(log_inner) if log_inner < 700.0 else math.inf
    outer = math.fsum((sign[~inside] * np.exp(logs[~inside])).tolist())
    return FunctionalSplit(inner=inner, outer=outer, log_inner=log_inner)


def leading_terms(tp: TestFunctionParams, g_weighted_sq: float) -> tuple[float, float]:
    """Closed-form leading terms of the inner and outer contributions.

    ``g_weighted_sq`` is ``int |x|^(-2 beta) G^2 dx``.
    """
    k = 4.0 * math.pi * (1.0 - tp.beta)
    inner = bubble_kappa(tp.beta) * math.exp(1.0 + k * tp.a0)
    outer = bubble_kappa(tp.beta) + k / tp.c_sq * g_weighted_sq
    return inner, outer


@dataclass(frozen=True)
class Verdict:
    passed: bool
    functional_value: float
    norm_value: float
    bound: float
    functional_margin: float
    norm_margin: float

    @property
    def label(self) -> str:
        return "PASS" if self.passed else "FAIL"


def contradiction_check(tp: TestFunctionParams, functional_value: float, norm_value: float, bound: float) -> Verdict:
    """PASS iff the norm is at most ``1 + 1e-3`` and the functional beats ``bound``."""
    f_margin = functional_value - bound
    n_margin = 1.0 + NORM_SLACK - norm_value
    return Verdict(
        passed=bool(n_margin >= 0.0 and f_margin > 0.0),
        functional_value=functional_value,
        norm_value=norm_value,
        bound=bound,
        functional_margin=f_margin,
        norm_margin=n_margin,
    )


@dataclass(frozen=True)
class TestFunctionReport:
    __test__ = False  # not a pytest class

    params: TestFunctionParams
    norm: float
    functional: FunctionalSplit
    bound: float
    verdict: Verdict
    normalized: Verdict


def evaluate_test_function(
    eps: float,
    beta: float,
    alpha: float,
    g: GreenLike,
    bound: float,
    n: int = 2048,
) -> TestFunctionReport:
    """Build, measure and judge one member of the family.

    Besides the raw verdict a normalized one is formed: when the norm exceeds
    1 the profile is divided by its norm before the functional is taken.
    """
    tp, phi = build_test_function(eps, beta, alpha, g, n)
    norm = testfn_norm(phi, tp)
    split = testfn_functional(phi, tp)
    raw = contradiction_check(tp, split.total, norm, bound)
    if norm > 1.0:
        scaled = phi * (1.0 / math.sqrt(norm))
        normalized = contradiction_check(tp, testfn_functional(scaled, tp).total, 1.0, bound)
    else:
        normalized = raw
    return TestFunctionReport(tp, norm, split, bound, raw, normalized)

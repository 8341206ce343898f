"""The singular Moser-Trudinger functional, its multiplier and the EL residual."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import RadialFunction, differentiate, hat_pairings, power_weights
from .norms import rim_weight

# Largest admissible log of a single weighted quadrature term.
LOG_CAP = 700.0


class ExponentOverflow(OverflowError):
    def __init__(self, radius: float, exponent: float):
        self.radius = radius
        self.exponent = exponent
        super().__init__(
            f"exponent {exponent:.4g} at r = {radius:.6g} exceeds the cap {LOG_CAP:g}"
        )


@dataclass(frozen=True)
class ProblemParams:
    """Singularity ``beta``, spectral shift ``alpha`` and subcriticality ``eps``.

    ``eps = 0`` is accepted for evaluating the critical functional; the
    subcritical solver requires ``eps > 0``.
    """

    beta: float
    alpha: float = 0.0
    eps: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.beta < 1.0:
            raise ValueError(f"beta must lie in [0, 1), got {self.beta}")
        if not 0.0 <= self.eps < 1.0 - self.beta:
            raise ValueError(f"eps must lie in [0, 1 - beta) = [0, {1.0 - self.beta:g}), got {self.eps}")
        if not (self.alpha >= 0.0 and math.isfinite(self.alpha)):
            raise ValueError(f"alpha must be non-negative, got {self.alpha}")

    @property
    def kappa(self) -> float:
        """Exponent coefficient ``4*pi*(1 - beta - eps)``."""
        return 4.0 * math.pi * (1.0 - self.beta - self.eps)

    def with_eps(self, eps: float) -> "ProblemParams":
        return ProblemParams(self.beta, self.alpha, eps)

    def check_alpha(self, lambda1: float) -> None:
        if not self.alpha < lambda1:
            raise ValueError(f"alpha = {self.alpha} is not below lambda_1(B) = {lambda1:.10g}")


def _log_terms(u: RadialFunction, p: ProblemParams) -> tuple[np.ndarray, np.ndarray]:
    """``log|W_i| + kappa u_i^2`` and ``sign(W_i)`` for the weights ``W`` of ``|x|^(-2 beta) dx``.

    The overflow cap is enforced on every term.
    """
    r = u.grid.nodes
    weights = power_weights(u.grid, -2.0 * p.beta)
    expo = p.kappa * u.values**2
    logs = np.log(np.abs(weights)) + expo
    bad = np.flatnonzero(logs > LOG_CAP)
    if bad.size:
        i = bad[0]
        raise ExponentOverflow(float(r[i]), float(expo[i]))
    return logs, np.sign(weights)


def mt_functional(u: RadialFunction, p: ProblemParams) -> float:
    """``int |x|^(-2 beta) exp(kappa u^2) dx``."""
    logs, sign = _log_terms(u, p)
    return math.fsum((sign * np.exp(logs)).tolist())


def lambda_eps(u: RadialFunction, p: ProblemParams) -> float:
    """Multiplier integral ``int |x|^(-2 beta) u^2 exp(kappa u^2) dx``."""
    logs, sign = _log_terms(u, p)
    return math.fsum((sign * np.exp(logs) * u.values**2).tolist())


def nonlinearity(u: RadialFunction, p: ProblemParams) -> np.ndarray:
    """Node values of ``|x|^(-2 beta) u exp(kappa u^2)``."""
    _log_terms(u, p)
    r = u.grid.nodes
    return r ** (-2.0 * p.beta) * u.values * np.exp(p.kappa * u.values**2)


def weak_residual_vector(u: RadialFunction, lam: float, p: ProblemParams) -> tuple[np.ndarray, np.ndarray]:
    """Hat-function pairings of both sides of the Euler-Lagrange equation.

    Returns ``(lhs_j, rhs_j)`` over interior breakpoints. The operator side is
    paired through the ground-state form with test functions
    ``sqrt(1 - r^2) * hat_j``; hats touching ``r = 0`` or ``r = 1`` are left out.
    """
    grid = u.grid
    r = grid.nodes
    w = rim_weight(r)
    w2 = 1.0 - r * r
    v = RadialFunction(grid, u.values / w)
    dv = differentiate(v).values
    lo, hi = grid.breakpoints[1], grid.breakpoints[-2]
    _, stiff, mass = hat_pairings(grid, w2 * dv, (1.0 - p.alpha * w2) * v.values, lo, hi)
    source = u.values * np.exp(p.kappa * u.values**2) * w / lam
    _, _, load = hat_pairings(grid, np.zeros_like(r), source, lo, hi, source_weights=power_weights(grid, -2.0 * p.beta))
    return stiff + mass, load


def el_residual(u: RadialFunction, lam: float, p: ProblemParams) -> float:
    """Relative weak residual ``max|lhs - rhs| / max|rhs|`` of the EL equation.

    Zero for ``u = 0``.
    """
    if not lam > 0.0:
        raise ValueError(f"multiplier must be positive, got {lam}")
    lhs, rhs = weak_residual_vector(u, lam, p)
    scale = float(np.max(np.abs(rhs))) if rhs.size else 0.0
    diff = float(np.max(np.abs(lhs - rhs))) if rhs.size else 0.0
    if scale == 0.0:
        return diff
    return diff / scale

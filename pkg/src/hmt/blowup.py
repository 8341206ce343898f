"""Concentration diagnostics for subcritical maximizers.

Scaling radius, rescaled profiles, the limiting bubble and finite-eps
analogues of the truncation, upper-bound and Dirac statements. At the eps
reachable on a desk these are measurements, not assertions of the limits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .functional import ProblemParams, _log_terms, lambda_eps
from .grid import (
    RadialFunction,
    differentiate,
    geometric_grid,
    hat_pairings,
    integrate,
    power_weights,
    value_at,
)
from .norms import rim_weight

# A truncation level's rim layer must sit this many times inside the outermost node.
RIM_LAYER_FACTOR = 1e4

# Smallest positive double is about 4.9e-324.
LOG_TINY = math.log(np.finfo(float).tiny)


def bubble_kappa(beta: float) -> float:
    """``pi / (1 - beta)``."""
    return math.pi / (1.0 - beta)


@dataclass(frozen=True)
class BlowupScale:
    value: float
    log: float
    underflow: bool


def blowup_scale(c_eps: float, lambda_eps: float, p: ProblemParams) -> BlowupScale:
    """``sqrt(lambda) / c * exp(-2 pi (1 - beta - eps) c^2)``, evaluated through its log.

    When the value is below the smallest normal double, ``value`` is 0 and
    ``underflow`` is set; ``log`` is always exact.
    """
    if not (c_eps > 0.0 and lambda_eps > 0.0):
        raise ValueError("c_eps and lambda_eps must be positive")
    log = 0.5 * math.log(lambda_eps) - math.log(c_eps) - 0.5 * p.kappa * c_eps * c_eps
    if log < LOG_TINY:
        return BlowupScale(0.0, log, True)
    return BlowupScale(math.exp(log), log, False)


def rescaled_profiles(
    u_eps: RadialFunction,
    c_eps: float,
    r_eps: float,
    p: ProblemParams,
    window,
) -> tuple[np.ndarray, np.ndarray]:
    """``psi(x) = u(s x) / c`` and ``phi(x) = c (u(s x) - c)`` with ``s = r_eps^(1/(1 - beta))``."""
    if not (c_eps > 0.0 and r_eps > 0.0):
        raise ValueError("c_eps and r_eps must be positive")
    x = np.asarray(window, dtype=float)
    if np.any(x < 0.0):
        raise ValueError("window radii must be non-negative")
    s = math.exp(math.log(r_eps) / (1.0 - p.beta))
    y = s * x
    if np.any(y >= u_eps.grid.radius):
        raise ValueError(f"window escapes the disc: s * max(window) = {float(np.max(y)):.6g}")
    vals = np.asarray(value_at(u_eps, y), dtype=float)
    return vals / c_eps, c_eps * (vals - c_eps)


def bubble_value(x_norm, beta: float):
    """``-log(1 + pi / (1 - beta) * |x|^(2 - 2 beta)) / (4 pi (1 - beta))``."""
    if not beta < 1.0:
        raise ValueError(f"beta must be below 1, got {beta}")
    x = np.asarray(x_norm, dtype=float)
    out = -np.log1p(bubble_kappa(beta) * x ** (2.0 - 2.0 * beta)) / (4.0 * math.pi * (1.0 - beta))
    return float(out) if out.ndim == 0 else out


def bubble_density(r: np.ndarray, beta: float) -> np.ndarray:
    """``|x|^(-2 beta) exp(8 pi (1 - beta) phi_0) = |x|^(-2 beta) (1 + k |x|^(2 - 2 beta))^(-2)``."""
    return r ** (-2.0 * beta) / (1.0 + bubble_kappa(beta) * r ** (2.0 - 2.0 * beta)) ** 2


def bubble_tail(beta: float, r_trunc: float) -> float:
    """Exact mass of the bubble density outside the ball of radius ``r_trunc``.

    With ``t = r^(2 - 2 beta)`` the integrand has the primitive
    ``-1 / (1 + k t)``, so the tail is ``1 / (1 + k R^(2 - 2 beta))``.
    """
    return 1.0 / (1.0 + bubble_kappa(beta) * r_trunc ** (2.0 - 2.0 * beta))


def bubble_grid(r_trunc: float, n: int, inner: float = 1e-12):
    return geometric_grid(inner, r_trunc, n)


def bubble_mass(beta: float, r_trunc: float = 1e3, n: int = 1024) -> float:
    """Quadrature of the bubble density on ``B_R`` plus the analytic tail."""
    if not 0.0 <= beta < 1.0:
        raise ValueError(f"beta must lie in [0, 1), got {beta}")
    if r_trunc < 10.0:
        raise ValueError(f"truncation radius must be at least 10, got {r_trunc}")
    grid = bubble_grid(r_trunc, n)
    return integrate(bubble_density(grid.nodes, beta), grid) + bubble_tail(beta, r_trunc)


def bubble_residual(beta: float, n: int = 1024, lo: float = 0.1, hi: float = 10.0) -> float:
    """Relative weak residual of ``-Laplacian(phi_0) = density`` on ``[lo, hi]``.

    ``phi_0`` is sampled on a geometric grid covering ``[lo / 10, 10 hi]`` and
    differentiated with the grid's own rule. Each hat pairing is divided by
    the pairing of the absolute integrands.
    """
    grid = geometric_grid(lo / 10.0, 10.0 * hi, n)
    phi = RadialFunction(grid, bubble_value(grid.nodes, beta))
    flux = differentiate(phi).values
    src = -bubble_density(grid.nodes, beta)
    _, stiff, load = hat_pairings(grid, flux, src, lo, hi)
    _, astiff, aload = hat_pairings(grid, flux, src, lo, hi, absolute=True)
    return float(np.max(np.abs(stiff + load) / (astiff + aload)))


def truncation_energy(u_eps: RadialFunction, c_eps: float, tau: float, alpha: float) -> float:
    """``||min(u, tau c)||_{H,alpha}^2`` in ground-state form.

    On the plateau ``min(u, tau c) / sqrt(1 - r^2)`` is differentiated
    exactly; elsewhere the grid rule is applied to ``u / sqrt(1 - r^2)``.

    When ``u ~ v1 sqrt(1 - r^2)`` at the rim with ``v1 > 0`` the plateau
    ends in a layer at ``1 - r^2 ~ (tau c / v1)^2`` that carries energy
    ``pi v1^2`` however small ``tau`` is. A level whose layer lies within
    ``RIM_LAYER_FACTOR`` times the outermost node's ``1 - r^2`` is refused.
    """
    if not 0.0 < tau <= 1.0:
        raise ValueError(f"tau must lie in (0, 1], got {tau}")
    grid = u_eps.grid
    r = grid.nodes
    w = rim_weight(r)
    w2 = w * w
    level = tau * c_eps
    v = u_eps.values / w
    layer = (level / v[-1]) ** 2 if v[-1] > 0.0 else math.inf
    if tau < 1.0 and layer < RIM_LAYER_FACTOR * w2[-1]:
        raise ValueError(
            f"tau = {tau:g} puts the rim layer at 1 - r^2 = {layer:.3g}, "
            f"not resolved by this grid (outermost node at {w2[-1]:.3g}); refine or raise tau"
        )
    flat = u_eps.values >= level
    dv = differentiate(RadialFunction(grid, v)).values
    v = np.where(flat, level / w, v)
    dv = np.where(flat, level * r / (w2 * w), dv)
    return integrate(w2 * dv * dv + v * v - alpha * w2 * v * v, grid)


def lemma5_bound(lambda_eps: float, c_eps: float, beta: float) -> float:
    """``pi / (1 - beta) + lambda / c^2``."""
    if not c_eps > 0.0:
        raise ValueError("c_eps must be positive")
    return math.pi / (1.0 - beta) + lambda_eps / (c_eps * c_eps)


TestFunction = Union[Callable[[np.ndarray], np.ndarray], RadialFunction]


def dirac_pairing(u_eps: RadialFunction, lambda_eps: float, p: ProblemParams, phi: TestFunction) -> float:
    """``int lambda^(-1) |x|^(-2 beta) c u exp(kappa u^2) phi dx`` with ``c = u(0)``."""
    if not lambda_eps > 0.0:
        raise ValueError("lambda_eps must be positive")
    grid = u_eps.grid
    vals = phi.values if isinstance(phi, RadialFunction) else np.broadcast_to(np.asarray(phi(grid.nodes), dtype=float), grid.nodes.shape)
    _log_terms(u_eps, p)
    dens = u_eps.values * np.exp(p.kappa * u_eps.values**2) * u_eps.origin_value / lambda_eps
    return math.fsum((power_weights(grid, -2.0 * p.beta) * dens * vals).tolist())


@dataclass(frozen=True)
class BlowupReport:
    c_eps: float
    lambda_eps: float
    r_eps: float
    r_eps_log: float
    r_eps_underflow: bool
    window_max: float
    profile_distance: float
    truncation_energies: dict
    lemma5_value: float
    f_value: float
    dirac_errors: dict

    @property
    def lemma5_ratio(self) -> float:
        return self.f_value / self.lemma5_value


DIRAC_TESTS = {
    "one": lambda r: np.ones_like(r),
    "1-r^2": lambda r: 1.0 - r * r,
    "cos(pi r/2)": lambda r: np.cos(0.5 * math.pi * r),
}


def blowup_report(
    u_eps: RadialFunction,
    p: ProblemParams,
    f_value: float,
    taus=(0.25, 0.5, 0.75, 1.0),
    window: float = 10.0,
    samples: int = 201,
) -> BlowupReport:
    """Collect the scale, bubble comparison and finite-eps lemma diagnostics of a maximizer."""
    c = u_eps.origin_value
    lam = lambda_eps(u_eps, p)
    scale = blowup_scale(c, lam, p)
    s_log = scale.log / (1.0 - p.beta)
    # keep the rescaled window inside the disc
    reach = min(window, 0.999 * u_eps.grid.radius * math.exp(-s_log)) if s_log > -700 else window
    x = np.linspace(0.0, reach, samples)
    if scale.underflow:
        dist = math.nan
    else:
        _, phi = rescaled_profiles(u_eps, c, scale.value, p, x)
        dist = float(np.max(np.abs(phi - bubble_value(x, p.beta))))
    energies = {float(t): truncation_energy(u_eps, c, t, p.alpha) for t in taus}
    diracs = {}
    for name, fn in DIRAC_TESTS.items():
        diracs[name] = abs(dirac_pairing(u_eps, lam, p, fn) - float(fn(np.zeros(1))[0]))
    return BlowupReport(
        c_eps=c,
        lambda_eps=lam,
        r_eps=scale.value,
        r_eps_log=scale.log,
        r_eps_underflow=scale.underflow,
        window_max=float(reach),
        profile_distance=dist,
        truncation_energies=energies,
        lemma5_value=lemma5_bound(lam, c, p.beta),
        f_value=f_value,
        dirac_errors=diracs,
    )

"""Hardy norms on the disc and the first eigenvalues of the associated forms.

Every Hardy-type quantity is evaluated through the ground-state substitution
``u = sqrt(1 - r^2) * v``, under which

    int |grad u|^2 - int u^2 / (1 - |x|^2)^2  =  int (1 - |x|^2) |grad v|^2 + int v^2.

The right-hand side is the closure of the Hardy form on the completed space:
it stays finite and correct for functions that behave like ``sqrt(1 - r)``
at the rim (where both terms on the left diverge separately). For functions
vanishing to first order at the rim the two sides agree up to quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _fem
from .grid import RadialFunction, RadialGrid, differentiate, integrate, power_weights

DECAY_FACTOR = 10.0
# Relative Rayleigh-quotient change accepted once it stops shrinking.
FLOOR_TOL = 1e-9


class DomainError(ValueError):
    """The function does not decay at the rim fast enough for the Hardy form."""


class EigenError(RuntimeError):
    """Inverse iteration did not converge."""


def rim_weight(r: np.ndarray) -> np.ndarray:
    """``sqrt(1 - r^2)``, the ground state of the Hardy operator at the rim."""
    return np.sqrt((1.0 - r) * (1.0 + r))


def _ground_state_parts(u: RadialFunction) -> tuple[np.ndarray, np.ndarray]:
    r = u.grid.nodes
    vals = u.values
    w = rim_weight(r)
    scale = float(np.max(np.abs(vals)))
    if scale == 0.0:
        return np.zeros_like(r), np.zeros_like(r)
    if abs(vals[-1]) > DECAY_FACTOR * w[-1] * scale:
        raise DomainError(
            f"u does not vanish at the rim: |u(r={r[-1]:.12g})| = {abs(vals[-1]):.3g} "
            f"exceeds {DECAY_FACTOR:g} * sqrt(1-r^2) * max|u|"
        )
    v = RadialFunction(u.grid, vals / w)
    dv = differentiate(v)
    return v.values, dv.values


def hardy_norm_sq(u: RadialFunction) -> float:
    """``||u||_H^2``, via the ground-state form."""
    v, dv = _ground_state_parts(u)
    r = u.grid.nodes
    total = integrate((1.0 - r * r) * dv * dv + v * v, u.grid)
    if not math.isfinite(total):
        raise DomainError("Hardy form overflowed")
    return total


def l2_norm_sq(u: RadialFunction) -> float:
    return integrate(u.values * u.values, u.grid)


def halpha_norm_sq(u: RadialFunction, alpha: float) -> float:
    """``||u||_H^2 - alpha * ||u||_2^2`` (squared reading of the perturbed norm)."""
    if alpha < 0.0:
        raise ValueError(f"alpha must be non-negative, got {alpha}")
    v, dv = _ground_state_parts(u)
    r = u.grid.nodes
    w2 = 1.0 - r * r
    # alpha * u^2 = alpha * (1 - r^2) * v^2, kept inside one sum
    return integrate(w2 * dv * dv + v * v - alpha * w2 * v * v, u.grid)


def l2beta_norm_sq(u: RadialFunction, beta: float) -> float:
    """``int |x|^(-2 beta) u^2 dx``."""
    if not 0.0 <= beta < 1.0:
        raise ValueError(f"beta must lie in [0, 1), got {beta}")
    return math.fsum((power_weights(u.grid, -2.0 * beta) * u.values**2).tolist())


def dirichlet_energy(u: RadialFunction) -> float:
    du = differentiate(u).values
    return integrate(du * du, u.grid)


def rim_potential_energy(u: RadialFunction) -> float:
    """``int u^2 / (1 - |x|^2)^2 dx`` by raw quadrature."""
    r = u.grid.nodes
    integrand = u.values**2 / ((1.0 - r) * (1.0 + r)) ** 2
    if not np.all(np.isfinite(integrand)):
        raise DomainError("rim potential integrand overflowed")
    return integrate(integrand, u.grid)


@dataclass(frozen=True)
class NormReport:
    dirichlet: float
    rim_potential: float
    hardy_sq: float
    l2_sq: float
    halpha_sq: float
    l2beta_sq: float

    @property
    def closure_gap(self) -> float:
        """``dirichlet - rim_potential - hardy_sq``; ~0 when u vanishes linearly at the rim."""
        return self.dirichlet - self.rim_potential - self.hardy_sq


def norm_report(u: RadialFunction, alpha: float = 0.0, beta: float = 0.0) -> NormReport:
    hardy = hardy_norm_sq(u)
    l2 = l2_norm_sq(u)
    return NormReport(
        dirichlet=dirichlet_energy(u),
        rim_potential=rim_potential_energy(u),
        hardy_sq=hardy,
        l2_sq=l2,
        halpha_sq=hardy - alpha * l2,
        l2beta_sq=l2beta_norm_sq(u, beta),
    )


# --- eigenvalues -----------------------------------------------------------


def inverse_iteration(stiff: np.ndarray, mass: np.ndarray, tol: float = 1e-12, max_iter: int = 500) -> tuple[float, np.ndarray]:
    """Smallest eigenpair of the banded pencil ``(stiff, mass)``.

    Deterministic start vector (all ones); stops when the Rayleigh quotient
    changes by less than ``tol`` relative twice in a row, or when its change
    is below ``FLOOR_TOL`` and no longer shrinking (round-off on fine grids).
    """
    solver = _fem.BandedSPD(stiff)
    x = np.ones(stiff.shape[1])
    x /= math.sqrt(x @ _fem.band_matvec(mass, x))
    lam = math.inf
    calm = 0
    prev = math.inf
    for _ in range(max_iter):
        y = solver.solve(_fem.band_matvec(mass, x))
        x = y / math.sqrt(y @ _fem.band_matvec(mass, y))
        new = float(x @ solver.matvec(x))
        change = abs(new - lam) / abs(new)
        calm = calm + 1 if change <= tol else 0
        lam = new
        if calm >= 2 or prev <= change <= FLOOR_TOL:
            return lam, x
        prev = change
    raise EigenError(f"inverse iteration did not converge in {max_iter} steps")


def first_eigenvalue(grid: RadialGrid, mode: str = "hardy", tol: float = 1e-12, max_iter: int = 500) -> float:
    """First radial eigenvalue of the Hardy form (or of ``-Laplacian``) against the L2 mass.

    ``mode="hardy"`` works on ``v = u / sqrt(1 - r^2)`` with no condition at
    the rim; ``mode="laplacian"`` imposes ``u(1) = 0``.
    """
    space = _fem.CubicSpace(grid)
    r = grid.nodes
    if mode == "hardy":
        w2 = (1.0 - r) * (1.0 + r)
        stiff = space.stiffness(w2) + space.mass(1.0)
        mass = space.mass(w2)
    elif mode == "laplacian":
        stiff = _fem.band_restrict(space.stiffness(), True)
        mass = _fem.band_restrict(space.mass(), True)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return inverse_iteration(stiff, mass, tol, max_iter)[0]


def first_eigenvalue_beta(beta: float, grid: RadialGrid, tol: float = 1e-12, max_iter: int = 500) -> float:
    """``inf int |grad u|^2`` over ``u(1) = 0`` with ``int |x|^(-2 beta) u^2 = 1``."""
    if not 0.0 <= beta < 1.0:
        raise ValueError(f"beta must lie in [0, 1), got {beta}")
    space = _fem.CubicSpace(grid)
    stiff = _fem.band_restrict(space.stiffness(), True)
    mass = _fem.band_restrict(space.mass(grid.nodes ** (-2.0 * beta)), True)
    return inverse_iteration(stiff, mass, tol, max_iter)[0]

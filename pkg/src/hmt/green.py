"""The Green function of the shifted Hardy operator with pole at the origin.

The pole is removed explicitly. With the cutoff ``eta = (1 - r^2)^3`` put

    G = Gamma + H,   Gamma = -eta * log(r) / (2 pi).

``Gamma`` carries the full logarithmic singularity and vanishes to third
order at the rim; ``-Laplacian(Gamma) - delta_0 = s`` with the smooth source

    s = (1 / 2 pi) * (log(r) * (eta'' + eta' / r) + 2 eta' / r).

``H`` solves the regular problem

    -Laplacian(H) - V H - alpha H = -s + (V + alpha) Gamma,   V = (1 - r^2)^(-2),

in ground-state form ``H = sqrt(1 - r^2) * v`` (no condition on ``v`` at
the rim), and the constant of the representation
``G = -log(r) / (2 pi) + A0 + Phi`` is ``A0 = H(0)``. In laplacian mode the
potential and the shift are dropped and ``H(1) = 0`` is imposed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from . import _fem
from .grid import RadialFunction, RadialGrid, extrapolate_origin, hat_pairings
from .norms import first_eigenvalue, rim_weight

TWO_PI = 2.0 * math.pi
CUTOFF_POWER = 3
A0_POINTS = 6
A0_SPREAD = 1e-3


class GreenError(RuntimeError):
    """The Green function could not be computed or its constant extracted."""


def _cutoff(r: np.ndarray, k: int = CUTOFF_POWER) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``eta``, ``eta'`` and ``eta''`` for ``eta = (1 - r^2)^k``."""
    w2 = (1.0 - r) * (1.0 + r)
    eta = w2**k
    d1 = -2.0 * k * r * w2 ** (k - 1)
    d2 = -2.0 * k * w2 ** (k - 1) + 4.0 * k * (k - 1) * r * r * w2 ** (k - 2)
    return eta, d1, d2


def singular_part(r: np.ndarray) -> np.ndarray:
    eta, _, _ = _cutoff(r)
    return -eta * np.log(r) / TWO_PI


def singular_part_deriv(r: np.ndarray) -> np.ndarray:
    eta, d1, _ = _cutoff(r)
    return -(d1 * np.log(r) + eta / r) / TWO_PI


def _source(r: np.ndarray) -> np.ndarray:
    _, d1, d2 = _cutoff(r)
    return (np.log(r) * (d2 + d1 / r) + 2.0 * d1 / r) / TWO_PI


@dataclass(frozen=True, eq=False)
class GreenFunction:
    alpha: float
    mode: str
    profile: RadialFunction
    a0: float
    regular_part: RadialFunction
    dofs: np.ndarray = field(repr=False)

    @property
    def grid(self) -> RadialGrid:
        return self.profile.grid

    def _regular(self, r: np.ndarray, derivative: bool) -> np.ndarray:
        space = _fem.CubicSpace(self.grid)
        if self.mode == "laplacian":
            return space.evaluate(self.dofs, r, derivative)
        v = space.evaluate(self.dofs, r)
        w = rim_weight(r)
        if not derivative:
            return w * v
        dv = space.evaluate(self.dofs, r, derivative=True)
        return w * dv - r * v / w

    def evaluate(self, r) -> np.ndarray:
        """``G(r)`` for ``0 < r < 1`` from the finite element solution."""
        r = _radii(r)
        return singular_part(r) + self._regular(r, False)

    def derivative(self, r) -> np.ndarray:
        r = _radii(r)
        return singular_part_deriv(r) + self._regular(r, True)


def _radii(r) -> np.ndarray:
    r = np.atleast_1d(np.asarray(r, dtype=float))
    if np.any(r <= 0.0) or np.any(r >= 1.0):
        raise ValueError("G is evaluated on 0 < r < 1 only")
    return r


def solve_green(alpha: float, grid: RadialGrid, mode: str = "hardy", lambda1: float | None = None) -> GreenFunction:
    """Solve for ``G`` with ``L_alpha G = delta_0`` on ``grid``.

    In hardy mode ``alpha`` must be below the first Hardy eigenvalue
    (computed on ``grid`` unless supplied).
    """
    if mode not in ("hardy", "laplacian"):
        raise ValueError(f"unknown mode {mode!r}")
    if alpha < 0.0 or not math.isfinite(alpha):
        raise ValueError(f"alpha must be non-negative, got {alpha}")
    space = _fem.CubicSpace(grid)
    r = grid.nodes
    w2 = (1.0 - r) * (1.0 + r)
    gam = singular_part(r)
    src = _source(r)
    try:
        if mode == "laplacian":
            stiff = _fem.band_restrict(space.stiffness(), True)
            h = _fem.BandedSPD(stiff).solve(space.load(-src)[:-1])
            dofs = np.append(h, 0.0)
            reg = space.values(dofs)
            alpha = 0.0
        else:
            lam1 = first_eigenvalue(grid, "hardy") if lambda1 is None else lambda1
            if alpha >= lam1:
                raise GreenError(f"alpha = {alpha} is not below lambda_1(B) = {lam1:.10g}; the operator is not coercive")
            w = np.sqrt(w2)
            f = -src + (1.0 / (w2 * w2) + alpha) * gam
            A = space.stiffness(w2) + space.mass(1.0 - alpha * w2)
            dofs = _fem.BandedSPD(A).solve(space.load(f * w))
            reg = w * space.values(dofs)
    except np.linalg.LinAlgError as exc:
        raise GreenError(f"linear solve failed: {exc}") from exc
    profile = RadialFunction(grid, gam + reg)
    tail = RadialFunction(grid, reg + (1.0 - _cutoff(r)[0]) * np.log(r) / TWO_PI)
    a0 = _extrapolate(tail, A0_POINTS)
    frozen = np.array(dofs)
    frozen.setflags(write=False)
    return GreenFunction(
        alpha=alpha,
        mode=mode,
        profile=profile,
        a0=a0,
        regular_part=RadialFunction(grid, tail.values - a0),
        dofs=frozen,
    )


def _extrapolate(f: RadialFunction, points: int) -> float:
    return extrapolate_origin(f.grid, f.values, points)


def extract_a0(g: GreenFunction, points: int = A0_POINTS, check: int = 4) -> float:
    """``lim (G(r) + log(r) / 2 pi)`` as ``r -> 0`` from the innermost nodes.

    Two stencils (``points`` and ``check`` nodes) are compared; a spread above
    ``A0_SPREAD`` is reported as an instability.
    """
    r = g.grid.nodes
    f = RadialFunction(g.grid, g.profile.values + np.log(r) / TWO_PI)
    a = _extrapolate(f, points)
    b = _extrapolate(f, check)
    if not (math.isfinite(a) and abs(a - b) <= A0_SPREAD):
        raise GreenError(f"A0 extrapolation unstable: {points}-point {a!r} vs {check}-point {b!r}")
    return a


def lemma9_bound(beta: float, a0: float) -> float:
    """``pi / (1 - beta) * (1 + exp(1 + 4 pi (1 - beta) A0))``."""
    if not beta < 1.0:
        raise ValueError(f"beta must be below 1, got {beta}")
    return math.pi / (1.0 - beta) * (1.0 + math.exp(1.0 + 4.0 * math.pi * (1.0 - beta) * a0))


def weak_residual(g: GreenFunction, lo: float = 0.05, hi: float = 0.95) -> float:
    """Relative weak residual of ``L_alpha G = 0`` on ``[lo, hi]``.

    Tested against ``sqrt(1 - r^2) * hat_j`` in ground-state form (laplacian
    mode: plain hats); each pairing is divided by the pairing of the
    absolute integrands over the same hat.
    """
    grid = g.grid
    r = grid.nodes
    vals = g.profile.values
    dvals = g.derivative(r)
    if g.mode == "laplacian":
        _, lhs, _ = hat_pairings(grid, dvals, vals, lo, hi)
        _, scale, _ = hat_pairings(grid, dvals, vals, lo, hi, absolute=True)
    else:
        w2 = (1.0 - r) * (1.0 + r)
        w = np.sqrt(w2)
        v = vals / w
        dv = (dvals + r * v / w) / w
        flux, src = w2 * dv, (1.0 - g.alpha * w2) * v
        _, stiff, mass = hat_pairings(grid, flux, src, lo, hi)
        _, astiff, amass = hat_pairings(grid, flux, src, lo, hi, absolute=True)
        lhs, scale = stiff + mass, astiff + amass
    if lhs.size == 0:
        raise ValueError(f"no breakpoint hats inside [{lo}, {hi}]")
    return float(np.max(np.abs(lhs) / scale))


def flux_balance(g: GreenFunction, rho: float) -> tuple[float, float]:
    """Both sides of ``-int_{dB_rho} dG/dnu = 1 + int_{B_rho} (V + alpha) G dx``."""
    if not 0.0 < rho < 1.0:
        raise ValueError("rho must lie in (0, 1)")
    flux = -TWO_PI * rho * float(g.derivative(rho)[0])
    if g.mode == "laplacian":
        return flux, 1.0

    def integrand(s: float) -> float:
        if s == 0.0:
            return 0.0
        pot = 1.0 / (1.0 - s * s) ** 2 + g.alpha
        return TWO_PI * s * pot * float(g.evaluate(s)[0])

    cuts = [b for b in g.grid.breakpoints if 0.0 < b < rho]
    value, _ = quad(integrand, 0.0, rho, points=cuts[-50:] or None, limit=400, epsabs=1e-12, epsrel=1e-12)
    return flux, 1.0 + value

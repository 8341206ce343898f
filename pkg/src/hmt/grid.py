"""Radial grids on the unit disc and the quadrature/interpolation built on them.

A grid is a partition of ``[0, R]`` (``R = 1`` for the disc) into elements,
with ``GAUSS_POINTS`` Gauss-Legendre nodes per element. Node ``r = 0`` is never
a grid node. Weights carry the ``2*pi*r`` Jacobian, so ``sum(w * f)``
approximates the disc integral of a radial ``f``.

Element breakpoints are clustered algebraically at both ends:

    x(t) = t**p0 / (t**p0 + (1 - t)**p1),   t = k / M

so ``x ~ t**p0`` near the origin and ``1 - x ~ (1 - t)**p1`` near the rim.

Interpolation, extrapolation and differentiation are element-local and use
the cubic Lagrange polynomial through the element's four Gauss nodes
(order 4; exact on cubics). ``origin_value`` is that cubic, taken from the
innermost element, evaluated at ``r = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

GAUSS_POINTS = 4
MIN_NODES = 16

_XI, _OMEGA = np.polynomial.legendre.leggauss(GAUSS_POINTS)


# Elements next to the origin that get product-integration weights.
POWER_ELEMENTS = 8


def _lagrange_matrices(xi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Coefficient matrix of the Lagrange basis on ``xi`` and its derivative map."""
    vander = np.vander(xi, increasing=True)
    coeffs = np.linalg.inv(vander)  # column j: monomial coefficients of basis j
    deriv = np.zeros_like(coeffs)
    for k in range(1, len(xi)):
        deriv[k - 1] = k * coeffs[k]
    return coeffs, deriv


_LCOEF, _LDCOEF = _lagrange_matrices(_XI)
# _DIFF[g, a] = derivative of basis a at Gauss node g (reference element)
_DIFF = np.vander(_XI, increasing=True) @ _LDCOEF


def lagrange_basis(xi: np.ndarray) -> np.ndarray:
    """Values of the four Gauss-node Lagrange polynomials at reference points ``xi``."""
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    return np.vander(xi, GAUSS_POINTS, increasing=True) @ _LCOEF


_ORIGIN_BASIS = lagrange_basis(np.array([-1.0]))[0]


def lagrange_basis_deriv(xi: np.ndarray) -> np.ndarray:
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    return np.vander(xi, GAUSS_POINTS, increasing=True) @ _LDCOEF


class GridError(ValueError):
    """Invalid grid parameters or grid/function mismatch."""


@dataclass(frozen=True)
class Grading:
    """Algebraic clustering exponents at the origin and at the rim."""

    origin_power: float = 3.0
    boundary_power: float = 3.0

    def __post_init__(self) -> None:
        for name in ("origin_power", "boundary_power"):
            p = getattr(self, name)
            if not (math.isfinite(p) and 1.0 <= p <= 8.0):
                raise GridError(f"{name} must lie in [1, 8], got {p!r}")

    def map(self, t: np.ndarray) -> np.ndarray:
        a, b = self.origin_power, self.boundary_power
        head = t**a
        tail = (1.0 - t) ** b
        x = head / (head + tail)
        x[0], x[-1] = 0.0, 1.0
        return x


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Composite Gauss grid on ``(0, radius)``.

    ``nodes`` and ``weights`` are flat arrays of length ``n = 4 * M``; node
    ``4*k + g`` is Gauss point ``g`` of element ``k``.
    """

    breakpoints: np.ndarray
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    grading: Grading | None = None

    @classmethod
    def from_breakpoints(cls, breakpoints, grading: Grading | None = None) -> "RadialGrid":
        x = np.asarray(breakpoints, dtype=float)
        if x.ndim != 1 or x.size < 2:
            raise GridError("need at least two breakpoints")
        if x[0] != 0.0:
            raise GridError("first breakpoint must be 0")
        if not np.all(np.diff(x) > 0.0):
            raise GridError("breakpoints must be strictly increasing")
        h = np.diff(x)
        mid = 0.5 * (x[:-1] + x[1:])
        r = mid[:, None] + 0.5 * h[:, None] * _XI[None, :]
        w = 2.0 * math.pi * r * (0.5 * h[:, None]) * _OMEGA[None, :]
        return cls(_frozen(x), _frozen(r.ravel()), _frozen(w.ravel()), grading)

    @property
    def n(self) -> int:
        return self.nodes.size

    @property
    def n_elements(self) -> int:
        return self.breakpoints.size - 1

    @property
    def radius(self) -> float:
        return float(self.breakpoints[-1])

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.breakpoints)

    def scaled(self, factor: float) -> "RadialGrid":
        """The same grid stretched to ``(0, factor * radius)``."""
        if not factor > 0.0:
            raise GridError("scale factor must be positive")
        return RadialGrid.from_breakpoints(self.breakpoints * factor, self.grading)

    def element_of(self, r) -> np.ndarray:
        """Index of the element containing each radius (endpoints clamp inward)."""
        k = np.searchsorted(self.breakpoints, np.asarray(r, dtype=float), side="right") - 1
        return np.clip(k, 0, self.n_elements - 1)

    def to_reference(self, r, k) -> np.ndarray:
        x = self.breakpoints
        return (2.0 * np.asarray(r, dtype=float) - x[k] - x[k + 1]) / (x[k + 1] - x[k])


def build_grid(n: int, grading: Grading | None = None) -> RadialGrid:
    """Graded composite Gauss grid with ``n`` nodes on the unit radius.

    ``n`` must be a multiple of 4 and at least 16. Deterministic.
    """
    if isinstance(n, bool) or int(n) != n:
        raise GridError(f"node count must be an integer, got {n!r}")
    n = int(n)
    if n < MIN_NODES:
        raise GridError(f"node count must be >= {MIN_NODES}, got {n}")
    if n % GAUSS_POINTS:
        raise GridError(f"node count must be a multiple of {GAUSS_POINTS}, got {n}")
    grading = Grading() if grading is None else grading
    m = n // GAUSS_POINTS
    t = np.linspace(0.0, 1.0, m + 1)
    return RadialGrid.from_breakpoints(grading.map(t), grading)


def geometric_grid(inner: float, outer: float, n: int) -> RadialGrid:
    """Grid on ``(0, outer)`` with one element ``[0, inner]`` and geometric elements beyond.

    Suited to integrands that vary on the scale of ``r`` itself over many
    decades, such as algebraic tails on large balls.
    """
    if not 0.0 < inner < outer:
        raise GridError("need 0 < inner < outer")
    if n < MIN_NODES or n % GAUSS_POINTS:
        raise GridError(f"node count must be a multiple of {GAUSS_POINTS} and >= {MIN_NODES}, got {n}")
    m = n // GAUSS_POINTS
    x = np.concatenate(([0.0], np.geomspace(inner, outer, m)))
    x[-1] = outer
    return RadialGrid.from_breakpoints(x)


@dataclass(frozen=True, eq=False)
class RadialFunction:
    """Values of a radial function at the nodes of ``grid``."""

    grid: RadialGrid
    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.array(self.values, dtype=float)
        if v.shape != self.grid.nodes.shape:
            raise GridError(
                f"function has {v.size} values but grid has {self.grid.n} nodes"
            )
        if not np.all(np.isfinite(v)):
            bad = self.grid.nodes[~np.isfinite(v)][0]
            raise GridError(f"non-finite value at r = {bad:.6g}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_callable(cls, grid: RadialGrid, f: Callable[[np.ndarray], np.ndarray]) -> "RadialFunction":
        return cls(grid, np.broadcast_to(np.asarray(f(grid.nodes), dtype=float), grid.nodes.shape))

    @property
    def origin_value(self) -> float:
        # r = 0 is the left end (xi = -1) of the innermost element
        return float(_ORIGIN_BASIS @ self.values[:GAUSS_POINTS])

    def by_element(self) -> np.ndarray:
        return self.values.reshape(self.grid.n_elements, GAUSS_POINTS)

    def __mul__(self, other: Union[float, "RadialFunction"]) -> "RadialFunction":
        if isinstance(other, RadialFunction):
            _check_same(self.grid, other.grid)
            return RadialFunction(self.grid, self.values * other.values)
        return RadialFunction(self.grid, self.values * float(other))

    __rmul__ = __mul__

    def __add__(self, other: "RadialFunction") -> "RadialFunction":
        _check_same(self.grid, other.grid)
        return RadialFunction(self.grid, self.values + other.values)

    def __sub__(self, other: "RadialFunction") -> "RadialFunction":
        _check_same(self.grid, other.grid)
        return RadialFunction(self.grid, self.values - other.values)


def _check_same(a: RadialGrid, b: RadialGrid) -> None:
    if a is not b and not (
        a.breakpoints.shape == b.breakpoints.shape and np.array_equal(a.breakpoints, b.breakpoints)
    ):
        raise GridError("functions live on different grids")


Integrand = Union[RadialFunction, Callable[[np.ndarray], np.ndarray], np.ndarray]


def _sample(f: Integrand, grid: RadialGrid) -> np.ndarray:
    if isinstance(f, RadialFunction):
        _check_same(f.grid, grid)
        return f.values
    if callable(f):
        vals = np.broadcast_to(np.asarray(f(grid.nodes), dtype=float), grid.nodes.shape)
    else:
        vals = np.asarray(f, dtype=float)
        if vals.shape != grid.nodes.shape:
            raise GridError(f"array of shape {vals.shape} does not match grid of {grid.n} nodes")
    if not np.all(np.isfinite(vals)):
        bad = grid.nodes[~np.isfinite(vals)][0]
        raise GridError(f"integrand is not finite at r = {bad:.6g}")
    return vals


def integrate(f: Integrand, grid: RadialGrid | None = None) -> float:
    """Disc integral ``sum_i w_i f(r_i)`` of a radial integrand.

    ``f`` may be a RadialFunction (its own grid is used unless ``grid`` is
    given, which must then match), a callable of ``r`` or a node array.
    The sum is correctly rounded, hence independent of summation order.
    """
    if grid is None:
        if not isinstance(f, RadialFunction):
            raise GridError("a grid is required for non-RadialFunction integrands")
        grid = f.grid
    vals = _sample(f, grid)
    return math.fsum((grid.weights * vals).tolist())


def power_weights(grid: RadialGrid, exponent: float, elements: int = POWER_ELEMENTS) -> np.ndarray:
    """Weights for ``int |x|^exponent f dx`` with a singular power ``exponent > -2``.

    On the innermost ``elements`` elements the weights are product-integration
    weights, exact when ``f`` is a cubic there; elsewhere they are the Gauss
    weights times ``r^exponent``.
    """
    if not exponent > -2.0:
        raise GridError(f"power {exponent} is not integrable at the origin")
    r = grid.nodes
    w = grid.weights * r**exponent
    if exponent == 0.0:
        return w
    s = exponent + 1.0
    x = grid.breakpoints
    j = np.arange(GAUSS_POINTS)
    for k in range(min(elements, grid.n_elements)):
        a, b = x[k], x[k + 1]
        sl = slice(GAUSS_POINTS * k, GAUSS_POINTS * (k + 1))
        # moments of (r / b)^j against 2 pi r^(1 + exponent) on [a, b]
        mom = 2.0 * math.pi * b ** (s + 1.0) * (1.0 - (a / b) ** (s + 1.0 + j)) / (s + 1.0 + j)
        vander = np.vander(r[sl] / b, GAUSS_POINTS, increasing=True).T
        w[sl] = np.linalg.solve(vander, mom)
    return w


def differentiate(f: RadialFunction) -> RadialFunction:
    """Element-local derivative of the cubic Gauss-node interpolant.

    Third-order accurate, exact for cubic polynomials.
    """
    grid = f.grid
    if grid.n < GAUSS_POINTS:
        raise GridError("grid is narrower than the differentiation stencil")
    local = f.by_element() @ _DIFF.T
    d = local * (2.0 / grid.widths)[:, None]
    return RadialFunction(grid, d.ravel())


def value_at(f: RadialFunction, r):
    """Cubic element-local interpolation of ``f`` at radius ``r``.

    ``r = 0`` returns ``f.origin_value``. Accepts scalars or arrays.
    """
    grid = f.grid
    ra = np.asarray(r, dtype=float)
    if np.any(ra < 0.0) or np.any(ra >= grid.radius) or not np.all(np.isfinite(ra)):
        raise GridError(f"radius outside [0, {grid.radius:g})")
    flat = ra.ravel()
    k = grid.element_of(flat)
    xi = grid.to_reference(flat, k)
    basis = lagrange_basis(xi)
    vals = np.einsum("ij,ij->i", basis, f.by_element()[k])
    vals = np.where(flat == 0.0, f.origin_value, vals)
    if ra.ndim == 0:
        return float(vals[0])
    return vals.reshape(ra.shape)


def derivative_at(f: RadialFunction, r) -> np.ndarray | float:
    """Derivative of the element-local cubic interpolant at ``r``."""
    grid = f.grid
    ra = np.asarray(r, dtype=float)
    if np.any(ra < 0.0) or np.any(ra >= grid.radius):
        raise GridError(f"radius outside [0, {grid.radius:g})")
    flat = ra.ravel()
    k = grid.element_of(flat)
    xi = grid.to_reference(flat, k)
    dbasis = lagrange_basis_deriv(xi) * (2.0 / grid.widths[k])[:, None]
    vals = np.einsum("ij,ij->i", dbasis, f.by_element()[k])
    if ra.ndim == 0:
        return float(vals[0])
    return vals.reshape(ra.shape)


def extrapolate_origin(grid: RadialGrid, values: np.ndarray, points: int) -> float:
    """Polynomial extrapolation to ``r = 0`` through the ``points`` innermost nodes."""
    if points < 2 or points > grid.n:
        raise GridError(f"stencil of {points} nodes is not available")
    r = grid.nodes[:points]
    y = np.asarray(values, dtype=float)[:points]
    # Neville's scheme at r = 0 on nodes scaled by the stencil width.
    scale = r[-1]
    x = r / scale
    p = y.copy()
    for m in range(1, points):
        p[: points - m] = (x[m:] * p[: points - m] - x[: points - m] * p[1 : points - m + 1]) / (
            x[m:] - x[: points - m]
        )
    return float(p[0])


def hat_pairings(
    grid: RadialGrid,
    flux: np.ndarray,
    source: np.ndarray,
    lo: float,
    hi: float,
    absolute: bool = False,
    source_weights: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Pair node data against the piecewise-linear hats of the breakpoints.

    For every interior breakpoint ``x_j`` whose hat is supported inside
    ``[lo, hi]`` returns ``(x_j, sum w*flux*hat_j', sum w*source*hat_j)``.
    With ``absolute=True`` the integrands are replaced by their absolute
    values, which gives a natural scale for relative residuals.
    ``source_weights`` replaces the grid weights for the source pairing.
    """
    x = grid.breakpoints
    h = grid.widths
    r = grid.nodes.reshape(-1, GAUSS_POINTS)
    w = grid.weights.reshape(-1, GAUSS_POINTS)
    ws = w if source_weights is None else np.asarray(source_weights, dtype=float).reshape(-1, GAUSS_POINTS)
    fl = np.asarray(flux, dtype=float).reshape(-1, GAUSS_POINTS)
    src = np.asarray(source, dtype=float).reshape(-1, GAUSS_POINTS)
    if absolute:
        fl, src = np.abs(fl), np.abs(src)
    rise = (r - x[:-1, None]) / h[:, None]  # hat of the right end of each element
    fall = 1.0 - rise
    d_fall = np.sum(w * fl, axis=1) * (1.0 if absolute else -1.0) / h
    d_rise = np.sum(w * fl, axis=1) * (1.0 / h)
    s_fall = np.sum(ws * src * fall, axis=1)
    s_rise = np.sum(ws * src * rise, axis=1)
    # hat j (1 <= j <= M-1) lives on elements j-1 (rising) and j (falling)
    stiff = d_rise[:-1] + d_fall[1:]
    load = s_rise[:-1] + s_fall[1:]
    centers = x[1:-1]
    keep = (x[:-2] >= lo) & (x[2:] <= hi)
    return centers[keep], stiff[keep], load[keep]

"""Continuous piecewise-cubic finite elements on a RadialGrid.

Element-local basis: Lagrange polynomials on the Gauss-Lobatto points of the
reference element, so neighbouring elements share one degree of freedom.
Integrals are taken with the grid's own Gauss rule (exact for the mass and
stiffness of constant-coefficient forms, including the ``2*pi*r`` factor).

Symmetric matrices are kept in LAPACK upper banded storage with three
super-diagonals: ``ab[3 + i - j, j] = A[i, j]`` for ``i <= j``.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import cho_solve_banded, cholesky_banded

from .grid import GAUSS_POINTS, RadialGrid

DEGREE = 3
BANDS = DEGREE

_LOBATTO = np.array([-1.0, -1.0 / np.sqrt(5.0), 1.0 / np.sqrt(5.0), 1.0])
_XI = np.polynomial.legendre.leggauss(GAUSS_POINTS)[0]
_COEF = np.linalg.inv(np.vander(_LOBATTO, increasing=True))
_DCOEF = np.zeros_like(_COEF)
for _k in range(1, DEGREE + 1):
    _DCOEF[_k - 1] = _k * _COEF[_k]


def shape(xi: np.ndarray) -> np.ndarray:
    return np.vander(np.atleast_1d(xi), DEGREE + 1, increasing=True) @ _COEF


def shape_deriv(xi: np.ndarray) -> np.ndarray:
    return np.vander(np.atleast_1d(xi), DEGREE + 1, increasing=True) @ _DCOEF


_B = shape(_XI)  # (gauss, local dof)
_D = shape_deriv(_XI)


class CubicSpace:
    """P3 Lagrange space on the elements of ``grid``."""

    def __init__(self, grid: RadialGrid):
        self.grid = grid
        self.m = grid.n_elements
        self.ndof = DEGREE * self.m + 1
        x = grid.breakpoints
        h = grid.widths
        local = 0.5 * (x[:-1, None] + x[1:, None]) + 0.5 * h[:, None] * _LOBATTO[None, :]
        coords = np.empty(self.ndof)
        coords[: -1] = local[:, :DEGREE].ravel()
        coords[-1] = x[-1]
        self.coords = coords
        self._w = grid.weights.reshape(self.m, GAUSS_POINTS)
        self._dscale = (2.0 / h)[:, None, None]

    def _local_dofs(self, dofs: np.ndarray) -> np.ndarray:
        idx = DEGREE * np.arange(self.m)[:, None] + np.arange(DEGREE + 1)[None, :]
        return np.asarray(dofs)[idx]

    def _assemble(self, local: np.ndarray) -> np.ndarray:
        ab = np.zeros((BANDS + 1, self.ndof))
        for a in range(DEGREE + 1):
            for b in range(a, DEGREE + 1):
                cols = DEGREE * np.arange(self.m) + b
                np.add.at(ab[BANDS + a - b], cols, local[:, a, b])
        return ab

    def stiffness(self, coef: np.ndarray | float = 1.0) -> np.ndarray:
        """Banded ``int coef * phi_a' * phi_b' dx``."""
        c = np.broadcast_to(np.asarray(coef, dtype=float), self.grid.nodes.shape).reshape(self.m, GAUSS_POINTS)
        d = _D[None, :, :] * self._dscale  # (elem, gauss, dof)
        local = np.einsum("eg,ega,egb->eab", self._w * c, d, d)
        return self._assemble(local)

    def mass(self, coef: np.ndarray | float = 1.0) -> np.ndarray:
        """Banded ``int coef * phi_a * phi_b dx``."""
        c = np.broadcast_to(np.asarray(coef, dtype=float), self.grid.nodes.shape).reshape(self.m, GAUSS_POINTS)
        local = np.einsum("eg,ga,gb->eab", self._w * c, _B, _B)
        return self._assemble(local)

    def load(self, f: np.ndarray, weights: np.ndarray | None = None) -> np.ndarray:
        """``int f * phi_a dx`` for node data ``f``; ``weights`` replaces the grid weights."""
        fe = np.asarray(f, dtype=float).reshape(self.m, GAUSS_POINTS)
        w = self._w if weights is None else np.asarray(weights, dtype=float).reshape(self.m, GAUSS_POINTS)
        local = np.einsum("eg,ga->ea", w * fe, _B)
        out = np.zeros(self.ndof)
        idx = DEGREE * np.arange(self.m)[:, None] + np.arange(DEGREE + 1)[None, :]
        np.add.at(out, idx, local)
        return out

    def values(self, dofs: np.ndarray) -> np.ndarray:
        return (self._local_dofs(dofs) @ _B.T).ravel()

    def derivatives(self, dofs: np.ndarray) -> np.ndarray:
        return ((self._local_dofs(dofs) @ _D.T) * (2.0 / self.grid.widths)[:, None]).ravel()

    def evaluate(self, dofs: np.ndarray, r, derivative: bool = False) -> np.ndarray:
        r = np.atleast_1d(np.asarray(r, dtype=float))
        k = self.grid.element_of(r)
        xi = self.grid.to_reference(r, k)
        loc = self._local_dofs(dofs)[k]
        if derivative:
            return np.einsum("ia,ia->i", shape_deriv(xi), loc) * (2.0 / self.grid.widths[k])
        return np.einsum("ia,ia->i", shape(xi), loc)

    def interpolate(self, f) -> np.ndarray:
        return np.asarray(f(self.coords), dtype=float)


def band_matvec(ab: np.ndarray, x: np.ndarray) -> np.ndarray:
    """``A @ x`` for a symmetric matrix in upper banded storage."""
    u = ab.shape[0] - 1
    n = x.size
    y = ab[u] * x
    for d in range(1, u + 1):
        diag = ab[u - d, d:]
        y[:-d] += diag * x[d:]
        y[d:] += diag * x[:-d]
    return y


def band_restrict(ab: np.ndarray, drop_last: bool) -> np.ndarray:
    return ab[:, :-1] if drop_last else ab


class BandedSPD:
    """Cholesky factor of a symmetric positive definite banded matrix."""

    def __init__(self, ab: np.ndarray):
        self.ab = ab
        self.factor = cholesky_banded(ab, lower=False)

    def solve(self, b: np.ndarray) -> np.ndarray:
        return cho_solve_banded((self.factor, False), b)

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return band_matvec(self.ab, x)

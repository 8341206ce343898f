"""Subcritical maximizers of the singular Moser-Trudinger functional.

The unknown is ``v = u / sqrt(1 - r^2)`` in the continuous cubic space, so
the constraint reads ``v^T A v = 1`` with

    A = stiffness(1 - r^2) + mass(1 - alpha * (1 - r^2)),

the matrix of the squared ``H,alpha`` norm. One step of the iteration solves
``A y = b(v)`` for the Euler-Lagrange load

    b_a = int |x|^(-2 beta) u exp(kappa u^2) sqrt(1 - r^2) phi_a dx

and renormalizes ``y``. Since the functional is convex in ``u`` this step is
an ascent step on the constraint sphere and its fixed points solve the
discrete Euler-Lagrange system ``A v = b / lambda``; the same update serves as
projected ascent and as fixed-point polishing.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import isotonic_regression

from . import _fem
from .functional import ExponentOverflow, ProblemParams, el_residual, lambda_eps, mt_functional
from .grid import Grading, RadialFunction, RadialGrid, build_grid, power_weights
from .norms import first_eigenvalue, rim_weight

ALPHA_MARGIN = 0.98
MONOTONE_SLACK = 1e-10
# Give up when the residual has not improved for this many iterations.
STALL_ITERS = 200


class SolverError(RuntimeError):
    """The maximizer could not be computed for the given parameters."""


@dataclass(frozen=True)
class SolverConfig:
    n: int = 512
    max_iter: int = 20000
    tol: float = 1e-9
    backtrack: int = 30
    monotone: bool = True
    initial: str = "bump"
    grading: Grading = field(default_factory=Grading)

    def __post_init__(self) -> None:
        if not self.tol > 0.0:
            raise ValueError(f"tolerance must be positive, got {self.tol}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be at least 1, got {self.max_iter}")
        if self.backtrack < 0:
            raise ValueError("backtrack must be non-negative")
        if self.initial not in INITIAL_PROFILES:
            raise ValueError(f"unknown initial profile {self.initial!r}; choose from {sorted(INITIAL_PROFILES)}")


# Initial profiles u = (1 - r^2) * g(r), listed by g; all are non-negative and non-increasing.
INITIAL_PROFILES = {
    "bump": lambda r: np.ones_like(r),
    "peaked": lambda r: np.exp(-8.0 * r * r),
}


@dataclass(frozen=True, eq=False)
class MaximizerResult:
    params: ProblemParams
    u_eps: RadialFunction
    c_eps: float
    lambda_eps: float
    f_value: float
    residual: float
    algebraic_residual: float
    iterations: int
    converged: bool
    dofs: np.ndarray = field(repr=False)
    error: str | None = None

    @property
    def grid(self) -> RadialGrid:
        return self.u_eps.grid


class _Problem:
    """Discrete operator and load for one parameter set on one grid."""

    def __init__(self, p: ProblemParams, grid: RadialGrid):
        self.p = p
        self.grid = grid
        self.space = _fem.CubicSpace(grid)
        r = grid.nodes
        self.w = rim_weight(r)
        w2 = (1.0 - r) * (1.0 + r)
        self.A = _fem.BandedSPD(self.space.stiffness(w2) + self.space.mass(1.0 - p.alpha * w2))
        self.weights = power_weights(grid, -2.0 * p.beta)

    def normalize(self, y: np.ndarray) -> np.ndarray:
        return y / math.sqrt(float(y @ self.A.matvec(y)))

    def profile(self, v: np.ndarray) -> RadialFunction:
        return RadialFunction(self.grid, self.w * self.space.values(v))

    def load(self, u: RadialFunction) -> np.ndarray:
        e = np.exp(self.p.kappa * u.values**2)
        return self.space.load(u.values * e * self.w, self.weights)

    def monotone(self, v: np.ndarray) -> np.ndarray:
        """Project onto non-negative, non-increasing profiles if the iterate left that class."""
        u = rim_weight(self.space.coords) * v
        inner = u[:-1]
        if np.all(inner >= -MONOTONE_SLACK) and np.all(np.diff(inner) <= MONOTONE_SLACK):
            return v
        proj = np.maximum(isotonic_regression(inner, increasing=False).x, 0.0)
        out = v.copy()
        out[:-1] = proj / rim_weight(self.space.coords[:-1])
        out[-1] = max(out[-1], 0.0)
        return out


@functools.lru_cache(maxsize=32)
def _lambda1(n: int, grading: Grading) -> float:
    return first_eigenvalue(build_grid(n, grading), "hardy")


def hardy_lambda1(n: int = 512, grading: Grading | None = None) -> float:
    """Cached first Hardy eigenvalue on the default grid family."""
    return _lambda1(n, Grading() if grading is None else grading)


def _initial(prob: _Problem, cfg: SolverConfig, warm: MaximizerResult | None) -> np.ndarray:
    space = prob.space
    if warm is not None:
        if warm.grid.n == prob.grid.n and np.array_equal(warm.grid.breakpoints, prob.grid.breakpoints):
            v = np.array(warm.dofs, dtype=float)
        else:
            wv = _fem.CubicSpace(warm.grid)
            x = np.minimum(space.coords, warm.grid.radius)
            v = wv.evaluate(warm.dofs, np.where(x >= warm.grid.radius, np.nextafter(warm.grid.radius, 0.0), x))
    else:
        x = space.coords
        v = rim_weight(x) * INITIAL_PROFILES[cfg.initial](x)
    return prob.normalize(v)


def maximize_subcritical(
    p: ProblemParams,
    cfg: SolverConfig | None = None,
    warm_start: MaximizerResult | None = None,
) -> MaximizerResult:
    """Maximize the functional over radial profiles with unit ``H,alpha`` norm.

    Returns the last iterate with ``converged=False`` when the algebraic
    residual does not reach ``cfg.tol`` within ``cfg.max_iter`` steps, or
    stops improving for ``STALL_ITERS`` steps (the round-off floor of a
    very fine grid).
    Raises ``SolverError`` for invalid parameters or an exponent overflow.
    """
    cfg = SolverConfig() if cfg is None else cfg
    if not p.eps > 0.0:
        raise SolverError("the subcritical solver needs eps > 0")
    lam1 = hardy_lambda1(cfg.n, cfg.grading)
    if p.alpha >= ALPHA_MARGIN * lam1:
        raise SolverError(
            f"alpha = {p.alpha} is too close to lambda_1(B) = {lam1:.10g} "
            f"(limit {ALPHA_MARGIN} * lambda_1)"
        )
    grid = build_grid(cfg.n, cfg.grading)
    prob = _Problem(p, grid)
    v = _initial(prob, cfg, warm_start)
    if cfg.monotone:
        v = prob.normalize(prob.monotone(v))

    def state(v: np.ndarray):
        u = prob.profile(v)
        return u, mt_functional(u, p)

    try:
        u, f_val = state(v)
        converged = False
        res = best = math.inf
        it = since_best = 0
        for it in range(1, cfg.max_iter + 1):
            lam = lambda_eps(u, p)
            b = prob.load(u)
            rhs = b / lam
            res = float(np.max(np.abs(prob.A.matvec(v) - rhs)) / np.max(np.abs(rhs)))
            if res < cfg.tol:
                converged = True
                break
            if res < best:
                best, since_best = res, 0
            else:
                since_best += 1
                if since_best >= STALL_ITERS:
                    break
            y = prob.normalize(prob.A.solve(b))
            if cfg.monotone:
                y = prob.normalize(prob.monotone(y))
            u_new, f_new = state(y)
            t = 1.0
            for _ in range(cfg.backtrack):
                if f_new >= f_val:
                    break
                t *= 0.5
                y = prob.normalize(v + t * (y - v))
                u_new, f_new = state(y)
            v, u, f_val = y, u_new, f_new
        lam = lambda_eps(u, p)
        weak = el_residual(u, lam, p)
    except ExponentOverflow as exc:
        raise SolverError(f"{exc}; eps = {p.eps} is too small for n = {cfg.n}, refine the grid") from exc
    frozen = np.array(v)
    frozen.setflags(write=False)
    return MaximizerResult(
        params=p,
        u_eps=u,
        c_eps=u.origin_value,
        lambda_eps=lam,
        f_value=f_val,
        residual=weak,
        algebraic_residual=res,
        iterations=it,
        converged=converged,
        dofs=frozen,
    )


def sweep_epsilon(
    p_base: ProblemParams,
    eps_list,
    cfg: SolverConfig | None = None,
) -> list["MaximizerResult | FailedPoint"]:
    """Continuation in ``eps``: each solve starts from the previous maximizer.

    A non-converged point keeps its best iterate with ``error`` set; a point
    where the solver raised becomes a ``FailedPoint``. The sweep carries on
    from the last converged point.
    """
    eps_list = [float(e) for e in eps_list]
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("eps_list must be strictly decreasing")
    for e in eps_list:
        ProblemParams(p_base.beta, p_base.alpha, e)
        if not e > 0.0:
            raise ValueError("eps values must be positive")
    cfg = SolverConfig() if cfg is None else cfg
    out: list[MaximizerResult | FailedPoint] = []
    warm = None
    for e in eps_list:
        try:
            res = maximize_subcritical(p_base.with_eps(e), cfg, warm)
        except SolverError as exc:
            out.append(FailedPoint(p_base.with_eps(e), str(exc)))
            continue
        if not res.converged:
            res = replace(res, error=f"not converged after {res.iterations} iterations")
        else:
            warm = res
        out.append(res)
    return out


@dataclass(frozen=True)
class FailedPoint:
    """Placeholder for a sweep point where no iterate could be produced."""

    params: ProblemParams
    error: str
    converged: bool = False

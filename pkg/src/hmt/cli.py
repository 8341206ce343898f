"""Command-line entry point: ``hmt <command> [flags]``.

Exit status: 0 on success, 1 on a numerical failure, 2 on a usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from . import acceptance
from .blowup import blowup_report, blowup_scale, bubble_mass, bubble_residual
from .functional import ProblemParams
from .green import GreenError, extract_a0, flux_balance, lemma9_bound, solve_green, weak_residual
from .grid import Grading, GridError, build_grid
from .norms import EigenError, first_eigenvalue, first_eigenvalue_beta
from .record import dumps, make_record, write_record
from .solver import FailedPoint, SolverConfig, SolverError, hardy_lambda1, maximize_subcritical, sweep_epsilon
from .testfn import TestFunctionError, evaluate_test_function

CSV_HEADER = ["beta", "alpha", "eps", "n", "F", "c_eps", "lambda_eps", "r_eps_log", "residual", "iters", "converged"]

EXIT_OK, EXIT_NUMERIC, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


# --- helpers ---------------------------------------------------------------


def _grading(args) -> Grading:
    try:
        return Grading(args.grading_origin, args.grading_boundary)
    except GridError as exc:
        raise UsageError(str(exc)) from exc


def _grid(args, grading: Grading):
    try:
        return build_grid(args.n, grading)
    except GridError as exc:
        raise UsageError(str(exc)) from exc


def _alpha(args, n: int, grading: Grading) -> float:
    if args.alpha_frac is not None:
        if not 0.0 <= args.alpha_frac < 1.0:
            raise UsageError("--alpha-frac must lie in [0, 1)")
        return args.alpha_frac * hardy_lambda1(n, grading)
    return args.alpha


def _params(beta: float, alpha: float, eps: float = 0.0) -> ProblemParams:
    try:
        return ProblemParams(beta, alpha, eps)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _emit(record: dict, out: str | None) -> None:
    if out:
        write_record(record, out)
    else:
        sys.stdout.write(dumps(record))


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return repr(x) if math.isfinite(x) else ""
    return "" if x is None else str(x)


# --- single runs -----------------------------------------------------------


def cmd_solve(args) -> int:
    grading = _grading(args)
    _grid(args, grading)
    alpha = _alpha(args, args.n, grading)
    p = _params(args.beta, alpha, args.eps)
    try:
        cfg = SolverConfig(
            n=args.n, max_iter=args.max_iter, tol=args.tol, monotone=not args.no_monotone,
            initial=args.initial, grading=grading,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    res = maximize_subcritical(p, cfg)
    rep = blowup_report(res.u_eps, p, res.f_value)
    outputs = {
        "F": res.f_value,
        "c_eps": res.c_eps,
        "lambda_eps": res.lambda_eps,
        "r_eps_log": rep.r_eps_log,
        "residual": res.residual,
        "algebraic_residual": res.algebraic_residual,
        "iterations": res.iterations,
        "converged": res.converged,
        "lemma5_bound": rep.lemma5_value,
        "truncation_energies": {str(k): v for k, v in rep.truncation_energies.items()},
        "dirac_errors": rep.dirac_errors,
        "profile_distance": rep.profile_distance,
        "profile_window": rep.window_max,
    }
    params = {"beta": p.beta, "alpha": p.alpha, "eps": p.eps, "n": args.n, "grading": [grading.origin_power, grading.boundary_power]}
    _emit(make_record("solve", params, outputs), args.out)
    print(f"F = {res.f_value!r}  c_eps = {res.c_eps!r}  residual = {res.residual:.3e}  converged = {res.converged}", file=sys.stderr)
    return EXIT_OK if res.converged else EXIT_NUMERIC


def cmd_eigen(args) -> int:
    grading = _grading(args)
    grid = _grid(args, grading)
    if args.mode == "beta":
        value = first_eigenvalue_beta(args.beta, grid)
    else:
        value = first_eigenvalue(grid, args.mode)
    params = {"beta": args.beta if args.mode == "beta" else None, "n": args.n, "grading": [grading.origin_power, grading.boundary_power]}
    _emit(make_record("eigen", params, {"mode": args.mode, "eigenvalue": value}), args.out)
    return EXIT_OK


def cmd_green(args) -> int:
    grading = _grading(args)
    grid = _grid(args, grading)
    alpha = 0.0 if args.mode == "laplacian" else _alpha(args, args.n, grading)
    g = solve_green(alpha, grid, args.mode)
    a0 = extract_a0(g)
    outputs = {
        "mode": args.mode,
        "a0": a0,
        "weak_residual": weak_residual(g),
        "flux_balance": {str(rho): list(flux_balance(g, rho)) for rho in (0.1, 0.3)},
        "lemma9_bound": lemma9_bound(args.beta, a0),
    }
    params = {"beta": args.beta, "alpha": alpha, "n": args.n, "grading": [grading.origin_power, grading.boundary_power]}
    _emit(make_record("green", params, outputs), args.out)
    return EXIT_OK


def cmd_bubble(args) -> int:
    if args.rmax < 10.0:
        raise UsageError("--rmax must be at least 10")
    if not 0.0 <= args.beta < 1.0:
        raise UsageError("--beta must lie in [0, 1)")
    mass = bubble_mass(args.beta, args.rmax, args.n)
    res = bubble_residual(args.beta, args.n)
    print(f"mass = {mass!r}")
    if args.out:
        params = {"beta": args.beta, "n": args.n}
        write_record(make_record("bubble", params, {"rmax": args.rmax, "mass": mass, "weak_residual": res}), args.out)
    return EXIT_OK


def cmd_testfn(args) -> int:
    grading = _grading(args)
    grid = _grid(args, grading)
    lam1 = first_eigenvalue(grid, "hardy")
    if args.alpha_frac is not None:
        if not 0.0 <= args.alpha_frac < 1.0:
            raise UsageError("--alpha-frac must lie in [0, 1)")
        alpha = args.alpha_frac * lam1
    else:
        alpha = args.alpha
    _params(args.beta, alpha)
    g = solve_green(alpha, grid, "hardy", lambda1=lam1)
    bound = lemma9_bound(args.beta, g.a0)
    rows = []
    for eps in args.eps:
        rep = evaluate_test_function(eps, args.beta, alpha, g, bound, args.testfn_n)
        tp = rep.params
        rows.append({
            "eps": eps,
            "R": tp.R,
            "b": tp.b,
            "c_sq": tp.c_sq,
            "matching_residual": tp.matching_residual,
            "norm": rep.norm,
            "inner": rep.functional.inner,
            "outer": rep.functional.outer,
            "functional": rep.functional.total,
            "functional_margin": rep.verdict.functional_margin,
            "norm_margin": rep.verdict.norm_margin,
            "verdict": rep.verdict.label,
            "normalized_verdict": rep.normalized.label,
            "normalized_margin": rep.normalized.functional_margin,
        })
        print(f"eps = {eps:g}: {rep.verdict.label}  margin = {rep.verdict.functional_margin:.6g}  norm = {rep.norm:.8f}", file=sys.stderr)
    params = {"beta": args.beta, "alpha": alpha, "eps": list(args.eps), "n": args.n, "grading": [grading.origin_power, grading.boundary_power]}
    outputs = {"lambda1": lam1, "a0": g.a0, "lemma9_bound": bound, "members": rows}
    _emit(make_record("testfn", params, outputs), args.out)
    return EXIT_OK


# --- sweeps ----------------------------------------------------------------

_LIST_KEYS = {"beta": float, "alpha": float, "eps": float, "n": int}
_SCALAR_KEYS = {
    "max_iter": int,
    "tol": float,
    "monotone": "bool",
    "initial": str,
    "grading_origin": float,
    "grading_boundary": float,
}


@dataclass(frozen=True)
class SweepConfig:
    betas: tuple
    alphas: tuple
    eps: tuple
    ns: tuple
    solver: dict


def _parse_bool(s: str) -> bool:
    low = s.strip().lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def parse_sweep_config(text: str) -> SweepConfig:
    """Parse ``key = value`` lines; list keys take comma-separated values.

    ``#`` starts a comment. Unknown or repeated keys are errors.
    """
    seen: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _LIST_KEYS and key not in _SCALAR_KEYS:
            raise UsageError(f"line {lineno}: unknown key {key!r}")
        if key in seen:
            raise UsageError(f"line {lineno}: duplicate key {key!r}")
        seen[key] = value
    for key in ("beta", "alpha", "eps"):
        if key not in seen:
            raise UsageError(f"missing key {key!r}")
    lists = {}
    for key, typ in _LIST_KEYS.items():
        raw = seen.get(key, "512" if key == "n" else "")
        items = [s.strip() for s in raw.split(",") if s.strip()]
        try:
            lists[key] = tuple(typ(s) for s in items)
        except ValueError as exc:
            raise UsageError(f"{key}: {exc}") from exc
    solver = {}
    for key, typ in _SCALAR_KEYS.items():
        if key in seen:
            try:
                solver[key] = _parse_bool(seen[key]) if typ == "bool" else typ(seen[key])
            except ValueError as exc:
                raise UsageError(f"{key}: {exc}") from exc
    eps = lists["eps"]
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise UsageError("eps values must be strictly decreasing")
    for b in lists["beta"]:
        for e in eps:
            _params(b, 0.0, e)
            if not e > 0.0:
                raise UsageError("eps values must be positive")
    for a in lists["alpha"]:
        if a < 0.0:
            raise UsageError("alpha values must be non-negative")
    cfg = SweepConfig(lists["beta"], lists["alpha"], eps, lists["n"], solver)
    _solver_config(cfg, cfg.ns[0] if cfg.ns else 512)
    return cfg


def _solver_config(cfg: SweepConfig, n: int) -> SolverConfig:
    kw = dict(cfg.solver)
    grading = Grading(kw.pop("grading_origin", 3.0), kw.pop("grading_boundary", 3.0))
    try:
        return SolverConfig(n=n, grading=grading, **kw)
    except (ValueError, GridError) as exc:
        raise UsageError(str(exc)) from exc


def _sweep_group(beta: float, alpha: float, n: int, eps: tuple, cfg: SweepConfig) -> list[list[str]]:
    rows = []
    base = ProblemParams(beta, alpha)
    try:
        results = sweep_epsilon(base, eps, _solver_config(cfg, n))
    except (SolverError, ValueError, GridError) as exc:
        results = [FailedPoint(base.with_eps(e), str(exc)) for e in eps]
    for e, r in zip(eps, results):
        if isinstance(r, FailedPoint):
            vals = [None] * 6 + [False]
        else:
            log_r = blowup_scale(r.c_eps, r.lambda_eps, r.params).log
            vals = [r.f_value, r.c_eps, r.lambda_eps, log_r, r.residual, r.iterations, r.converged]
        rows.append([_fmt(v) for v in (beta, alpha, e, n, *vals)])
    return rows


def _workers(jobs: int) -> int:
    cap = os.environ.get("HMT_THREADS")
    limit = os.cpu_count() or 1
    if cap:
        try:
            limit = max(1, int(cap))
        except ValueError as exc:
            raise UsageError(f"HMT_THREADS must be an integer, got {cap!r}") from exc
    return max(1, min(limit, jobs))


def run_sweep(cfg: SweepConfig) -> str:
    """Execute a sweep and return the CSV text (rows in configuration order)."""
    groups = [(b, a, n) for b in cfg.betas for a in cfg.alphas for n in cfg.ns] if cfg.eps else []
    workers = _workers(len(groups))
    if workers == 1:
        blocks = [_sweep_group(b, a, n, cfg.eps, cfg) for b, a, n in groups]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_sweep_group, b, a, n, cfg.eps, cfg) for b, a, n in groups]
            blocks = [f.result() for f in futures]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for block in blocks:
        writer.writerows(block)
    return buf.getvalue()


def cmd_sweep(args) -> int:
    try:
        text = Path(args.config).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config: {exc}") from exc
    cfg = parse_sweep_config(text)
    out = run_sweep(cfg)
    if args.out:
        Path(args.out).write_text(out, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(out)
    failed = any(line.endswith(",false") for line in out.splitlines()[1:])
    return EXIT_NUMERIC if failed else EXIT_OK


# --- verify ----------------------------------------------------------------


def build_artifacts() -> tuple[list, dict[str, str]]:
    """Run criteria 1-9 and render every artifact to text, without timings."""
    results = acceptance.run_numeric_criteria()
    files: dict[str, str] = {}
    crit = {f"C{r.number}": {"title": r.title, "passed": r.passed, "values": r.values} for r in results}
    files["criteria.json"] = dumps(make_record("verify", {"seed": acceptance.POSITIVITY_SEED}, crit))

    cfg = SweepConfig((0.5,), (0.0,), acceptance.SWEEP_EPS, (512,), {})
    files["sweep.csv"] = run_sweep(cfg)

    p = ProblemParams(0.5, 0.0, 0.2)
    res = maximize_subcritical(p, SolverConfig(n=512))
    rep = blowup_report(res.u_eps, p, res.f_value)
    files["solve.json"] = dumps(make_record(
        "solve",
        {"beta": 0.5, "alpha": 0.0, "eps": 0.2, "n": 512, "grading": [3.0, 3.0]},
        {"F": res.f_value, "c_eps": res.c_eps, "lambda_eps": res.lambda_eps, "r_eps_log": rep.r_eps_log,
         "residual": res.residual, "iterations": res.iterations, "converged": res.converged,
         "lemma5_bound": rep.lemma5_value},
    ))
    lam1, g, bound, reports = acceptance.testfn_sweep()
    files["testfn.json"] = dumps(make_record(
        "testfn",
        {"beta": 0.25, "alpha": g.alpha, "eps": list(acceptance.TESTFN_EPS), "n": 1024},
        {"lambda1": lam1, "a0": g.a0, "lemma9_bound": bound,
         "members": [{"eps": r.params.eps, "norm": r.norm, "functional": r.functional.total,
                      "verdict": r.verdict.label} for r in reports]},
    ))
    grid = build_grid(1024)
    files["green.json"] = dumps(make_record(
        "green", {"alpha": 0.0, "n": 1024},
        {"a0": solve_green(0.0, grid).a0, "laplacian_a0": solve_green(0.0, grid, "laplacian").a0},
    ))
    files["bubble.json"] = dumps(make_record(
        "bubble", {"n": 1024},
        {f"beta={b}": bubble_mass(b, 1e3) for b in (0.0, 0.25, 0.5, 0.75)},
    ))
    return results, files


def cmd_verify(args) -> int:
    results, files = build_artifacts()
    _, again = build_artifacts()
    results.append(acceptance.criterion_10(files, again))
    for r in results:
        print(r.line())
    out = Path(args.out) if args.out else Path(tempfile.mkdtemp(prefix="hmt-verify-"))
    out.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        (out / name).write_text(text, encoding="utf-8", newline="\n")
    summary = {f"C{r.number}": r.passed for r in results}
    write_record(make_record("verify", {}, {"passed": summary}), out / "verify.json")
    print(f"artifacts written to {out}")
    failed = [f"C{r.number}" for r in results if not r.passed]
    if failed:
        print("failed: " + ", ".join(failed), file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


# --- parser ----------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add_grid(p) -> None:
    p.add_argument("--n", type=int, default=512, help="node count (multiple of 4, >= 16)")
    p.add_argument("--grading-origin", type=float, default=3.0)
    p.add_argument("--grading-boundary", type=float, default=3.0)


def _add_alpha(p) -> None:
    g = p.add_mutually_exclusive_group()
    g.add_argument("--alpha", type=float, default=0.0)
    g.add_argument("--alpha-frac", type=float, default=None, help="alpha as a fraction of lambda_1(B)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hmt", description="Singular Hardy-Moser-Trudinger numerical laboratory.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", help="subcritical maximizer")
    p.add_argument("--beta", type=float, required=True)
    _add_alpha(p)
    p.add_argument("--eps", type=float, required=True)
    _add_grid(p)
    p.add_argument("--max-iter", type=int, default=20000)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--initial", default="bump")
    p.add_argument("--no-monotone", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("eigen", help="first radial eigenvalue")
    p.add_argument("--mode", choices=["hardy", "laplacian", "beta"], default="hardy")
    p.add_argument("--beta", type=float, default=0.0)
    _add_grid(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_eigen)

    p = sub.add_parser("green", help="Green function and A0")
    p.add_argument("--mode", choices=["hardy", "laplacian"], default="hardy")
    p.add_argument("--beta", type=float, default=0.0, help="beta for the upper bound")
    _add_alpha(p)
    _add_grid(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_green)

    p = sub.add_parser("bubble", help="bubble mass")
    p.add_argument("--beta", type=float, default=0.0)
    p.add_argument("--rmax", type=float, default=1e3)
    p.add_argument("--n", type=int, default=1024)
    p.add_argument("--out")
    p.set_defaults(func=cmd_bubble)

    p = sub.add_parser("testfn", help="test-function check against the upper bound")
    p.add_argument("--beta", type=float, required=True)
    _add_alpha(p)
    p.add_argument("--eps", type=float, nargs="+", required=True)
    _add_grid(p)
    p.add_argument("--testfn-n", type=int, default=2048)
    p.add_argument("--out")
    p.set_defaults(func=cmd_testfn)

    p = sub.add_parser("sweep", help="eps sweeps from a key = value config file")
    p.add_argument("config")
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", help="run the acceptance suite")
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"hmt: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SolverError, GreenError, EigenError, TestFunctionError, GridError, OverflowError, ValueError) as exc:
        print(f"hmt: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())

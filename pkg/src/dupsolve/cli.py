"""Command-line interface: ``dupsolve {expand,solve,check,bench}``.

Exit codes: 0 success, 2 configuration error, 3 numeric failure, 4 I/O error.
Failures print a one-line JSON object on stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
import time
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import problems
from .catalog import AdditionFormula
from .checker import DEFAULT_TOL, check_necessary, check_sufficient
from .double_angle import CLOSED_FORM_MAX_ORDER, taylor_closed_form, taylor_general
from .duplication import DuplicationConfig, convergence_study, polygonal
from .errors import ConfigError, DupsolveError, ExprSyntaxError, NumericError
from .expr import parse
from .ivp import IvpProblem
from .reference import dp45_solve, rk4_solve

log = logging.getLogger("dupsolve")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4
CSV_HEADER = ("t", "x_ref", "x_method", "abs_error")
FLOOR = 1e-13
ROUTE_DISAGREE = 1e-8
SUITES = ("example1", "example2", "convergence", "taylor-order", "points-sweep")


class _ArgParser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


# -- problem files ----------------------------------------------------------------

def load_problem(path: str | None, f: str | None = None, x0: str | None = None) -> IvpProblem:
    """Problem from a JSON file, or from inline ``--f``/``--x0``."""
    if path is None:
        if f is None or x0 is None:
            raise ConfigError("give a problem file or both --f and --x0")
        return IvpProblem.from_text(f, x0)
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(doc, dict) or "f" not in doc or "x0" not in doc:
        raise ConfigError(f"{path}: problem file needs 'f' and 'x0'")
    problem = IvpProblem.from_text(
        doc["f"], doc["x0"], doc.get("label", Path(path).stem),
        exact_R=doc.get("exact_R"), exact_solution=doc.get("exact_solution"),
    )
    if not math.isfinite(problem.x0):
        raise ConfigError("x0 must be finite")
    return problem


# -- output helpers ---------------------------------------------------------------------

def _fmt(v: float) -> str:
    return "%.17g" % v


def write_run_csv(path: Path, ts, x_ref, x_method) -> float:
    """Write rows sorted by t with abs_error recomputed; return the max error."""
    rows = sorted(zip(map(float, ts), map(float, x_ref), map(float, x_method)))
    worst = 0.0
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_HEADER)
        for t, xr, xm in rows:
            err = abs(xm - xr)
            worst = err if not (err <= worst) else worst  # NaN wins
            w.writerow((_fmt(t), _fmt(xr), _fmt(xm), _fmt(err)))
    return worst


def _json_float(v: float):
    return v if isinstance(v, float) and math.isfinite(v) else None


def _threads(args) -> int | None:
    if getattr(args, "threads", None) is not None:
        return args.threads
    env = os.environ.get("DUPSOLVE_THREADS")
    if env:
        try:
            return int(env)
        except ValueError as exc:
            raise ConfigError(f"DUPSOLVE_THREADS must be an integer, got {env!r}") from exc
    return None


def _reference(problem: IvpProblem, interval: tuple[float, float], ts) -> Callable[[float], float]:
    if problem.exact_solution is not None:
        return problem.exact_solution
    # no closed form: a tight adaptive run landing on every node
    a, b = interval
    fwd = [t for t in ts if t > 0]
    bwd = [t for t in ts if t < 0]
    sols = {}
    if fwd:
        sols[1] = dp45_solve(problem, max(b, max(fwd)), rtol=1e-13, atol=1e-15, t_eval=fwd)
    if bwd:
        sols[-1] = dp45_solve(problem, min(a, min(bwd)), rtol=1e-13, atol=1e-15, t_eval=bwd)
    return lambda t: problem.x0 if t == 0 else sols[1 if t > 0 else -1](t)


# -- expand -------------------------------------------------------------------------------

def cmd_expand(args) -> int:
    problem = load_problem(args.problem, args.f, args.x0)
    k = args.order
    if k < 1:
        raise ConfigError("--order must be >= 1")
    route = args.route
    if route == "closed" and k > CLOSED_FORM_MAX_ORDER:
        taylor_closed_form(problem.f, problem.x0, k)  # raises OrderTooHigh
    general = taylor_general(problem.f, problem.x0, k) if route != "closed" else None
    closed = None
    if route == "closed" or (route == "both" and k <= CLOSED_FORM_MAX_ORDER):
        closed = taylor_closed_form(problem.f, problem.x0, k)
    out = args.stdout
    print(f"# R(x) = sum r_k (x - x0)^k, x0 = {problem.x0!r}, f = {problem.f}", file=out)
    cols = ["k"] + (["general"] if general else []) + (["closed_form"] if closed else [])
    if general and closed:
        cols.append("flag")
    print("\t".join(cols), file=out)
    disagree = 0
    for i in range(k + 1):
        row = [str(i)]
        if general:
            row.append(_fmt(general.coeffs[i]))
        if closed:
            row.append(_fmt(closed.coeffs[i]))
        if general and closed:
            g, c = general.coeffs[i], closed.coeffs[i]
            bad = abs(g - c) > ROUTE_DISAGREE * max(1.0, abs(g), abs(c))
            disagree += bad
            row.append("DISAGREE" if bad else "ok")
        print("\t".join(row), file=out)
    if disagree:
        log.warning("%d coefficient(s) differ between routes by more than %g", disagree, ROUTE_DISAGREE)
    return EXIT_OK


# -- solve --------------------------------------------------------------------------------

def _config_from_args(args, interval) -> DuplicationConfig:
    return DuplicationConfig(
        n=args.n, m1=args.m1, m2=args.m2, r0=args.r0, interval=interval,
        r_source=args.r_source, points=args.points if args.n is None else None,
    )


def run_method(problem: IvpProblem, method: str, interval, config: DuplicationConfig | None,
               threads=None, h: float = 1e-3, rtol: float = 1e-10):
    """Node times and method values for one run."""
    if method == "duplication":
        approx = polygonal(problem, config, threads=threads)
        return approx.ts, approx.values
    ts = config.nodes() if config is not None else np.linspace(*interval, 2)
    vals = {}
    for side in (1, -1):
        pts = [float(t) for t in ts if side * t > 0]
        if not pts:
            continue
        end = max(pts) if side > 0 else min(pts)
        if method == "rk4":
            sol = rk4_solve(problem, end, h)
        else:
            sol = dp45_solve(problem, end, rtol=rtol, atol=rtol * 1e-2, t_eval=pts)
        vals.update({t: sol(t) for t in pts})
    return ts, np.array([problem.x0 if t == 0 else vals[float(t)] for t in ts])


def cmd_solve(args) -> int:
    problem = load_problem(args.problem, args.f, args.x0)
    a, b = args.interval
    interval = (float(a), float(b))
    if args.n is None and args.points is None:
        raise ConfigError("give --points N or --n n")
    config = _config_from_args(args, interval)
    t0 = time.perf_counter()
    ts, xm = run_method(problem, args.method, interval, config, _threads(args), args.h, args.rtol)
    wall = time.perf_counter() - t0
    ref = _reference(problem, interval, ts)
    xr = [ref(float(t)) for t in ts]
    out = Path(args.out)
    try:
        worst = write_run_csv(out, ts, xr, xm)
        meta = {
            "method": args.method, "config": config.echo(), "wall_time_s": wall,
            "max_error": _json_float(worst), "error_floor": bool(worst <= FLOOR),
            "reference": "closed-form" if problem.exact_solution is not None else "dp45",
        }
        out.with_name(out.name + ".meta.json").write_text(json.dumps(meta, indent=2))
    except OSError as exc:
        raise OutputError(str(exc)) from exc
    print(f"wrote {len(ts)} rows to {out}; max abs_error = {worst:.3e}", file=args.stdout)
    return EXIT_OK


# -- check --------------------------------------------------------------------------------

def _parse_grid(spec: str) -> np.ndarray:
    try:
        lo, hi, n = spec.split(":")
        lo_f, hi_f, n_i = float(parse(lo, variables=())()), float(parse(hi, variables=())()), int(n)
    except (ValueError, ExprSyntaxError) as exc:
        raise ConfigError(f"grid spec must be lo:hi:n, got {spec!r}") from exc
    if n_i < 1:
        raise ConfigError("grid needs at least one point")
    return np.linspace(lo_f, hi_f, n_i)


def load_formula(spec: str) -> AdditionFormula:
    """R from a JSON file ({"R": "...", "x0": ...}), a text file, or inline text."""
    text = spec
    doc = {}
    p = Path(spec)
    if p.suffix in (".json", ".txt", ".expr") or p.exists():
        try:
            raw = p.read_text(encoding="utf-8")
        except OSError as exc:
            raise OutputError(str(exc)) from exc
        if p.suffix == ".json":
            try:
                doc = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{spec}: invalid JSON ({exc})") from exc
            text = doc.get("R")
            if text is None:
                raise ConfigError(f"{spec}: needs an 'R' field")
        else:
            text = raw.strip()
    ast = parse(text, bivariate=True)
    x0 = doc.get("x0")
    return AdditionFormula("cli", "bivariate", ast, "", float(x0) if x0 is not None else math.nan,
                           ast=ast)


def cmd_check(args) -> int:
    formula = load_formula(args.formula)
    x0 = float(parse(args.x0, variables=())()) if args.x0 is not None else formula.x0
    if math.isnan(x0):
        raise ConfigError("--x0 is required unless the R file provides it")
    grid = _parse_grid(args.grid)
    report = check_necessary(formula, x0, grid, args.tol)
    if args.t_grid:
        report = report.merged(check_sufficient(formula, x0, _parse_grid(args.t_grid), args.tol))
    text = report.to_json(indent=2)
    if args.out:
        try:
            Path(args.out).write_text(text)
        except OSError as exc:
            raise OutputError(str(exc)) from exc
    print(text, file=args.stdout)
    for c in report.conditions:
        if not c.passed:
            log.info("condition (%s) %s failed: max residual %.3e", c.label, c.name, c.max_residual)
    return EXIT_OK


# -- bench --------------------------------------------------------------------------------

class _Bench:
    def __init__(self, suite: str, out: Path, threads):
        self.suite, self.out, self.threads = suite, out, threads
        self.cases: list[dict] = []
        self.derived: dict = {}

    def case(self, name: str, fn: Callable[[], tuple], config: dict) -> float | None:
        """Run one case; failures are recorded, not raised."""
        t0 = time.perf_counter()
        entry = {"name": name, "config": config}
        try:
            ts, xr, xm = fn()
            worst = write_run_csv(self.out / f"{name}.csv", ts, xr, xm)
            entry["max_error"] = _json_float(worst)
        except OSError:
            raise
        except (DupsolveError, ArithmeticError, ValueError) as exc:
            entry["max_error"] = None
            entry["error"] = {"type": type(exc).__name__, "message": str(exc)}
            worst = None
        entry["wall_time_s"] = time.perf_counter() - t0
        self.cases.append(entry)
        return worst

    def write(self) -> dict:
        summary = {"suite": self.suite, "cases": self.cases}
        if self.derived:
            summary["derived"] = self.derived
        (self.out / "summary.json").write_text(json.dumps(summary, indent=2))
        return summary


def _dup_case(problem, config, threads, eval_ts=None):
    def run():
        approx = polygonal(problem, config, threads=threads)
        ts = approx.ts if eval_ts is None else eval_ts
        xm = approx.values if eval_ts is None else approx(ts)
        return ts, [problem.exact_solution(float(t)) for t in ts], xm
    return run


def _dp45_case(problem, interval, points, rtol=1e-10):
    def run():
        ts, xm = run_method(problem, "dp45", interval,
                            DuplicationConfig(points=points, interval=interval), rtol=rtol)
        return ts, [problem.exact_solution(float(t)) for t in ts], xm
    return run


def _nonincreasing(values) -> bool:
    v = [math.inf if x is None else x for x in values]
    return all(math.isfinite(a) and b <= a * 1.2 for a, b in zip(v, v[1:])) and math.isfinite(v[-1])


def bench(suite: str, out: Path, threads=None) -> dict:
    if suite not in SUITES:
        raise ConfigError(f"unknown suite {suite!r}; choose from {', '.join(SUITES)}")
    out.mkdir(parents=True, exist_ok=True)
    b = _Bench(suite, out, threads)
    if suite == "example1":
        p = problems.example1()
        for tag, interval, pts in (("I1", (-0.5, 0.5), 240), ("I2", (-0.5, 0.99), 10000)):
            cfg = DuplicationConfig(points=pts, interval=interval, r_source="exact")
            b.case(f"{tag}_exact_R", _dup_case(p, cfg, threads), cfg.echo())
            cfg_t = DuplicationConfig(points=pts, interval=interval, r_source="taylor", m2=20)
            b.case(f"{tag}_taylor_R20", _dup_case(p, cfg_t, threads), cfg_t.echo())
            b.case(f"{tag}_dp45", _dp45_case(p, interval, pts),
                   {"method": "dp45", "rtol": 1e-10, "interval": list(interval), "points": pts})
    elif suite == "example2":
        p = problems.example2()
        D = problems.example2_half_period()
        cfg = DuplicationConfig(points=200, interval=D, r_source="exact", **problems.EXAMPLE2_SEED)
        b.case("half_period_exact_R", _dup_case(p, cfg, threads), cfg.echo())
        b.case("half_period_dp45", _dp45_case(p, D, 200),
               {"method": "dp45", "rtol": 1e-10, "interval": list(D), "points": 200})
    elif suite == "convergence":
        p = problems.example1()
        interval = (-0.5, 0.5)
        ns = list(range(4, 10))
        for n in ns:
            cfg = DuplicationConfig(n=n, interval=interval, r_source="exact")
            # rows at nodes and midpoints, where the interpolation error peaks
            ts = cfg.nodes()
            dense = np.sort(np.concatenate([ts, 0.5 * (ts[1:] + ts[:-1])]))
            b.case(f"n{n}", _dup_case(p, cfg, threads, dense), cfg.echo())
        study = convergence_study(p, p.exact_solution, ns, interval, r_source="exact")
        b.derived = {"fitted_order": study.order, "mesh": study.mesh.tolist(),
                     "max_error": study.errors.tolist()}
    elif suite == "taylor-order":
        p = problems.example2()
        D = problems.example2_half_period()
        errs = []
        for m2 in (10, 15, 20, 30):
            cfg = DuplicationConfig(points=200, interval=D, r_source="taylor", m2=m2,
                                    **problems.EXAMPLE2_SEED)
            errs.append(b.case(f"m2_{m2}", _dup_case(p, cfg, threads), cfg.echo()))
        b.derived = {"nonincreasing": _nonincreasing(errs)}
    elif suite == "points-sweep":
        p = problems.example2()
        D = problems.example2_half_period()
        grid = np.linspace(D[0], D[1], 4001)
        for source in ("taylor", "exact"):
            errs = []
            for pts in (80, 160, 320, 640, 1280, 2560):
                cfg = DuplicationConfig(points=pts, interval=D, r_source=source, m2=30,
                                        **problems.EXAMPLE2_SEED)
                errs.append(b.case(f"{source}_{pts}", _dup_case(p, cfg, threads, grid), cfg.echo()))
            b.derived[f"{source}_nonincreasing"] = _nonincreasing(errs)
    return b.write()


def cmd_bench(args) -> int:
    try:
        summary = bench(args.suite, Path(args.out), _threads(args))
    except OSError as exc:
        raise OutputError(str(exc)) from exc
    for c in summary["cases"]:
        err = c["max_error"]
        shown = f"{err:.3e}" if err is not None else c.get("error", {}).get("type", "n/a")
        print(f"{c['name']:>24}  max_error={shown}  wall={c['wall_time_s']:.4f}s", file=args.stdout)
    return EXIT_OK


# -- entry point ----------------------------------------------------------------------------

class OutputError(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    ap = _ArgParser(prog="dupsolve", description="Duplication-algorithm ODE solver and formula checker.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_ArgParser)

    def problem_args(p):
        p.add_argument("problem", nargs="?", help="problem JSON file")
        p.add_argument("--f", help="right-hand side f(x), instead of a problem file")
        p.add_argument("--x0", help="initial value (number or rational text)")

    p = sub.add_parser("expand", help="Taylor coefficients of the double-angle formula")
    problem_args(p)
    p.add_argument("--order", "-k", type=int, required=True)
    p.add_argument("--route", choices=("both", "general", "closed"), default="both")
    p.set_defaults(func=cmd_expand)

    p = sub.add_parser("solve", help="approximate x(t) on an interval and write a CSV")
    problem_args(p)
    p.add_argument("--interval", nargs=2, type=float, metavar=("A", "B"), required=True)
    p.add_argument("--points", type=int)
    p.add_argument("--n", type=int, help="halvings; gives the coupled 2^n + 1 node partition")
    p.add_argument("--m1", type=int, default=20)
    p.add_argument("--m2", type=int, default=20)
    p.add_argument("--r0", type=float, default=0.1)
    p.add_argument("--r-source", choices=("auto", "exact", "taylor"), default="auto")
    p.add_argument("--method", choices=("duplication", "rk4", "dp45"), default="duplication")
    p.add_argument("--h", type=float, default=1e-3, help="rk4 step")
    p.add_argument("--rtol", type=float, default=1e-10, help="dp45 relative tolerance")
    p.add_argument("--out", required=True)
    p.add_argument("--threads", type=int)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("check", help="check that R(x, y) is an addition formula")
    p.add_argument("formula", help="R as text, or a .json/.txt file holding it")
    p.add_argument("--x0")
    p.add_argument("--grid", default="0.5:2:9", help="lo:hi:n values for x, y, z")
    p.add_argument("--t-grid", help="lo:hi:n times for the sufficient-condition checks")
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.add_argument("--out")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("bench", help="run a benchmark suite")
    p.add_argument("suite", choices=SUITES)
    p.add_argument("--out", required=True)
    p.add_argument("--threads", type=int)
    p.set_defaults(func=cmd_bench)
    return ap


def _fail(exc: BaseException, code: int, stderr) -> int:
    doc = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    for attr in ("offset", "iteration", "t", "name"):
        v = getattr(exc, attr, None)
        if v is not None and isinstance(v, (int, float, str)):
            doc[attr] = v
    print(json.dumps(doc), file=stderr)
    return code


def main(argv: Sequence[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        args.stdout = stdout
        return args.func(args)
    except ConfigError as exc:
        return _fail(exc, EXIT_CONFIG, stderr)
    except (NumericError, ArithmeticError) as exc:
        return _fail(exc, EXIT_NUMERIC, stderr)
    except (OutputError, OSError) as exc:
        return _fail(exc, EXIT_IO, stderr)
    except DupsolveError as exc:
        # CenterMismatch and friends are programming errors surfaced as config problems
        return _fail(exc, EXIT_CONFIG, stderr)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

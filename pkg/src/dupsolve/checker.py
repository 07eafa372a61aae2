"""Numerical checks that a bivariate R(x, y) is an addition formula.

Necessary conditions, for R(phi(t), phi(tau)) = phi(t + tau) with phi(0) = x0:

    (i)   R(x, y) = R(y, x)
    (ii)  R(x0, y) = y and R(x, x0) = x
    (iii) R_x(x0, z) = R_y(z, x0)
    (iv)  R(R(x, y), z) = R(x, R(y, z))

The generating ODE is x' = R_x(x0, x) x'(0).  Sufficiency is checked through
R_x(a, b) R_x(x0, a) = R_x(x0, R(a, b)) and, end to end, by integrating that
ODE and comparing x(t + tau) with R(x(t), x(tau)).

The sufficient-condition residual is divided by max(1, |R_x(x0, R(a, b))|).
Derivatives are central differences with h = 1e-6 max(1, |z|), so residuals
of order 1e-10 are normal and the default tolerance is 1e-6.  When R carries
an expression tree the partial derivatives come from jets instead.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .catalog import AdditionFormula
from .errors import EmptyGrid, NumericError
from .expr import ExprAst, eval_jet
from .jet import variable
from .reference import CallableProblem, dp45_solve

DEFAULT_TOL = 1e-6
FD_REL_STEP = 1e-6


@dataclass
class ConditionResult:
    name: str
    label: str
    max_residual: float = 0.0
    worst_point: tuple | None = None
    passed: bool = True
    evaluated: int = 0
    skipped: int = 0

    @property
    def coverage(self) -> float:
        total = self.evaluated + self.skipped
        return self.evaluated / total if total else 0.0

    def record(self, residual: float, point: tuple) -> None:
        self.evaluated += 1
        residual = float(residual)
        if not math.isfinite(residual):
            residual = math.inf
        if self.worst_point is None or residual > self.max_residual:
            self.max_residual = residual
            self.worst_point = tuple(float(p) for p in point)

    def finish(self, tol: float) -> "ConditionResult":
        # a condition with no evaluated point cannot pass
        self.passed = bool(self.evaluated > 0 and self.max_residual <= tol)
        return self


@dataclass
class CheckReport:
    conditions: list[ConditionResult]
    grid: str
    tol: float
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.conditions)

    def failed(self) -> list[str]:
        return [c.name for c in self.conditions if not c.passed]

    def __getitem__(self, name: str) -> ConditionResult:
        for c in self.conditions:
            if c.name == name or c.label == name:
                return c
        raise KeyError(name)

    def merged(self, other: "CheckReport") -> "CheckReport":
        return CheckReport(self.conditions + other.conditions, f"{self.grid}; {other.grid}",
                           self.tol, self.notes + other.notes)

    def to_dict(self) -> dict:
        conds = []
        for c in self.conditions:
            d = asdict(c)
            d["coverage"] = c.coverage
            if not math.isfinite(d["max_residual"]):
                d["max_residual"] = None
            conds.append(d)
        return {"passed": self.passed, "tol": self.tol, "grid": self.grid,
                "conditions": conds, "notes": self.notes}

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def _fd_step(z: float) -> float:
    return FD_REL_STEP * max(1.0, abs(z))


def _as_callable(R) -> Callable[[float, float], float]:
    return R if callable(R) else R.evaluator


def _ast_of(R) -> ExprAst | None:
    if isinstance(R, ExprAst):
        return R
    return getattr(R, "ast", None)


def partial_x(R, x: float, y: float) -> float:
    """dR/dx at (x, y): jet derivative for expression trees, central difference otherwise."""
    ast = _ast_of(R)
    if ast is not None:
        return float(eval_jet(ast, variable(x, 1), y).coeffs[1])
    h = _fd_step(x)
    g = _as_callable(R)
    return (g(x + h, y) - g(x - h, y)) / (2.0 * h)


def partial_y(R, x: float, y: float) -> float:
    ast = _ast_of(R)
    if ast is not None:
        return float(eval_jet(ast, x, variable(y, 1)).coeffs[1])
    h = _fd_step(y)
    g = _as_callable(R)
    return (g(x, y + h) - g(x, y - h)) / (2.0 * h)


class DerivedRHS:
    """f(z) = R_x(x0, z) * xdot0."""

    def __init__(self, R, x0: float, xdot0: float):
        self.R, self.x0, self.xdot0 = R, float(x0), float(xdot0)
        exact = _ast_of(R) is not None
        self.accuracy = "exact (jet)" if exact else f"O(h^2), h = {FD_REL_STEP:g} max(1, |z|)"

    def __call__(self, z: float) -> float:
        return partial_x(self.R, self.x0, z) * self.xdot0


def derive_f(R, x0: float, xdot0: float = 1.0) -> DerivedRHS:
    return DerivedRHS(R, x0, xdot0)


def _grid_values(grid) -> np.ndarray:
    vals = np.asarray(list(grid) if not isinstance(grid, np.ndarray) else grid, dtype=float)
    if vals.size == 0:
        raise EmptyGrid("grid has no points")
    return np.unique(vals.ravel())


def _describe(vals: np.ndarray) -> str:
    return f"{len(vals)} values in [{vals.min():.6g}, {vals.max():.6g}]"


def _run(cond: ConditionResult, fn: Callable[..., float], points: Iterable[tuple]) -> None:
    for pt in points:
        try:
            res = fn(*pt)
        except (ArithmeticError, ValueError):
            cond.skipped += 1
            continue
        cond.record(res, pt)


def check_necessary(R, x0: float, grid, tol: float = DEFAULT_TOL) -> CheckReport:
    """Residuals of conditions (i)-(iv) on the Cartesian products of ``grid``."""
    vals = _grid_values(grid)
    g = _as_callable(R)
    x0 = float(x0)
    pairs = list(itertools.product(vals, repeat=2))

    sym = ConditionResult("symmetry", "i")
    _run(sym, lambda x, y: abs(g(x, y) - g(y, x)), pairs)

    ident = ConditionResult("identity", "ii")
    _run(ident, lambda y: max(abs(g(x0, y) - y), abs(g(y, x0) - y)), [(v,) for v in vals])

    cross = ConditionResult("cross_partial", "iii")
    _run(cross, lambda z: abs(partial_x(R, x0, z) - partial_y(R, z, x0)), [(v,) for v in vals])

    assoc = ConditionResult("associativity", "iv")
    _run(assoc, lambda x, y, z: abs(g(g(x, y), z) - g(x, g(y, z))),
         itertools.product(vals, repeat=3))

    conds = [c.finish(tol) for c in (sym, ident, cross, assoc)]
    return CheckReport(conds, _describe(vals), tol)


def _solve_both_ways(rhs: Callable[[float], float], x0: float, times: Sequence[float]):
    """Integrate from 0 to every requested time, forwards and backwards."""
    pos = sorted({t for t in times if t > 0})
    neg = sorted({t for t in times if t < 0}, reverse=True)
    values = {0.0: x0}
    problem = CallableProblem(rhs, x0, "derived")
    for side in (pos, neg):
        if not side:
            continue
        sol = dp45_solve(problem, side[-1], rtol=1e-12, atol=1e-14, t_eval=side)
        for t in side:
            values[t] = sol(t)
    return values


def check_sufficient(R, x0: float, grid_t, tol: float = DEFAULT_TOL) -> CheckReport:
    """Sufficient-condition residual and end-to-end addition law along the derived solution.

    The ODE is x' = R_x(x0, x) with x'(0) = 1; any other normalization only
    rescales time and leaves R unchanged.
    """
    ts = _grid_values(grid_t)
    g = _as_callable(R)
    x0 = float(x0)
    f = derive_f(R, x0, 1.0)
    notes = [f"derived f accuracy: {f.accuracy}"]
    sums = sorted({float(a + b) for a, b in itertools.product(ts, repeat=2)} | set(map(float, ts)))

    e2e = ConditionResult("end_to_end", "addition law")
    suff = ConditionResult("sufficient_iii", "R_x(a,b) R_x(x0,a) = R_x(x0,R(a,b))")
    try:
        xs = _solve_both_ways(f, x0, sums)
    except (NumericError, ArithmeticError, ValueError) as exc:
        notes.append(f"integration failed: {exc}")
        return CheckReport([suff.finish(tol), e2e.finish(tol)], _describe(ts), tol, notes)

    values = np.unique([xs[float(t)] for t in ts])

    def suff_residual(a, b):
        # relative once the derivatives exceed 1: the h^2 error scales with them
        rhs = partial_x(R, x0, g(a, b))
        return abs(partial_x(R, a, b) * partial_x(R, x0, a) - rhs) / max(1.0, abs(rhs))

    _run(suff, suff_residual, itertools.product(values, repeat=2))
    _run(
        e2e,
        lambda t, tau: abs(g(xs[float(t)], xs[float(tau)]) - xs[float(t + tau)]),
        itertools.product(ts, repeat=2),
    )
    return CheckReport([suff.finish(tol), e2e.finish(tol)], f"t in {_describe(ts)}", tol, notes)


def check_formula(formula: AdditionFormula, tol: float = DEFAULT_TOL, size: int = 9) -> CheckReport:
    """Run both checks on a catalog entry's documented box and time range."""
    lo, hi = formula.box
    report = check_necessary(formula, formula.x0, np.linspace(lo, hi, size), tol)
    t_lo, t_hi = formula.t_range if formula.t_range else (-0.25, 0.25)
    grid_t = np.linspace(t_lo / 2, t_hi / 2, size)
    return report.merged(check_sufficient(formula, formula.x0, grid_t, tol))


def perturbed(formula: AdditionFormula, delta: float = 1e-3) -> AdditionFormula:
    """The same formula multiplied by (1 + delta); used to test sensitivity."""
    g = formula.evaluator
    return AdditionFormula(
        formula.name + f"*(1+{delta:g})", formula.arity, lambda x, y: (1.0 + delta) * g(x, y),
        formula.validity, formula.x0, formula.box, formula.solution, formula.t_range,
    )

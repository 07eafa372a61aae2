"""Taylor polynomial of the solution of x' = f(x), x(0) = x0, at t = 0."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

from .expr import ExprAst, eval_jet, eval_scalar, parse
from .jet import Jet, horner

log = logging.getLogger(__name__)

DEFAULT_M1 = 20
NEAR_DEGENERATE = 1e-13


@dataclass(frozen=True)
class IvpProblem:
    """x' = f(x), x(0) = x0, optionally with a known double-angle formula and solution."""

    f: ExprAst
    x0: float
    label: str = ""
    exact_R: Optional[Callable[[float], float]] = field(default=None, compare=False, repr=False)
    exact_solution: Optional[Callable[[float], float]] = field(default=None, compare=False, repr=False)

    @classmethod
    def from_text(cls, f: str, x0, label: str = "", exact_R=None, exact_solution=None) -> "IvpProblem":
        """Build from expression text; ``exact_R`` and ``exact_solution`` may be text or callables."""
        R = parse(exact_R) if isinstance(exact_R, str) else exact_R
        sol = exact_solution
        if isinstance(sol, str):
            sol = parse(sol, variables=("t",))
        return cls(parse(f), parse_number(x0), label, R, sol)

    def rhs(self, x: float) -> float:
        return eval_scalar(self.f, x)


def parse_number(value) -> float:
    """Accept a float, an int, or text such as ``"-5/12"`` or ``"0.25"``."""
    if isinstance(value, str):
        ast = parse(value, variables=())
        return eval_scalar(ast)
    if isinstance(value, Fraction):
        return float(value)
    return float(value)


@dataclass(frozen=True)
class SolutionSeries:
    x0: float
    coeffs: np.ndarray
    degenerate: bool = False

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, t: float) -> float:
        return eval_series(self, t)


def solve_taylor(problem: IvpProblem, m1: int = DEFAULT_M1) -> SolutionSeries:
    """Order-``m1`` Taylor coefficients of x(t) about t = 0.

    Uses (k+1) c[k+1] = [f(x(t))]_k, each right-hand coefficient read off a
    jet evaluation of f on the partial series.
    """
    if m1 < 1:
        raise ValueError("m1 must be >= 1")
    x0 = float(problem.x0)
    f0 = eval_scalar(problem.f, x0)
    coeffs = np.zeros(m1 + 1)
    coeffs[0] = x0
    if f0 == 0.0:
        coeffs.setflags(write=False)
        return SolutionSeries(x0, coeffs, degenerate=True)
    if abs(f0) < NEAR_DEGENERATE:
        log.warning("|f(x0)| = %.3g is nearly zero; Taylor coefficients may be huge", abs(f0))
    coeffs[1] = f0
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(1, m1):
            fx = eval_jet(problem.f, Jet(0.0, coeffs[: k + 1]))
            coeffs[k + 1] = fx.coeffs[k] / (k + 1)
    coeffs.setflags(write=False)
    return SolutionSeries(x0, coeffs)


def eval_series(s: SolutionSeries, t: float) -> float:
    return horner(s.coeffs, t)

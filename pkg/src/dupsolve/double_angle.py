"""Taylor expansion of the double-angle formula R, where x(2t) = R(x(t)).

Differentiating x(2t) = R(x(t)) and substituting x' = f(x) gives the
functional equation 2 f(R(u)) = R'(u) f(u).  Its Taylor coefficients about
x0 are triangular: the order-k coefficient of the residual involves r_{k+1}
only through the term -(k+1) f(x0) r_{k+1}.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DegenerateProblem, DomainError, IterationError, OrderTooHigh
from .expr import ExprAst, eval_jet, eval_scalar
from .jet import Jet, horner, variable

log = logging.getLogger(__name__)

DEFAULT_M2 = 20
CLOSED_FORM_MAX_ORDER = 10


@dataclass(frozen=True)
class DoubleAngleSeries:
    x0: float
    coeffs: np.ndarray

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, x: float) -> float:
        return eval_R(self, x)

    def derivatives(self) -> np.ndarray:
        return self.coeffs * np.array([math.factorial(k) for k in range(len(self.coeffs))])


def _f0(f: ExprAst, x0: float) -> float:
    f0 = eval_scalar(f, x0)
    if f0 == 0.0:
        raise DegenerateProblem(
            f"f(x0) = 0 at x0 = {x0}: the solution is constant and R is undetermined"
        )
    return f0


def taylor_general(f: ExprAst, x0: float, m2: int = DEFAULT_M2) -> DoubleAngleSeries:
    """Coefficients r_0..r_m2 of R about x0 by order-by-order solution."""
    if m2 < 1:
        raise ValueError("m2 must be >= 1")
    x0 = float(x0)
    f0 = _f0(f, x0)
    r = np.zeros(m2 + 1)
    r[0] = x0
    r[1] = 2.0
    if m2 == 1:
        r.setflags(write=False)
        return DoubleAngleSeries(x0, r)
    with np.errstate(over="ignore", invalid="ignore"):
        fu = eval_jet(f, variable(x0, m2)).coeffs[:m2]
        for k in range(1, m2):
            # with r[k+1] still zero, residual_k is everything except -(k+1) f0 r[k+1]
            f_of_R = eval_jet(f, Jet(x0, r)).coeffs
            dR = r[1 : k + 1] * np.arange(1, k + 1)
            rk = 2.0 * f_of_R[k] - np.dot(dR, fu[k:0:-1])
            r[k + 1] = rk / ((k + 1) * f0)
    if not np.all(np.isfinite(r)):
        bad = int(np.argmin(np.isfinite(r)))
        log.warning("R coefficients overflow from order %d on (f(x0) = %.3g)", bad, f0)
    r.setflags(write=False)
    return DoubleAngleSeries(x0, r)


def _closed_form_derivatives(d: np.ndarray) -> list[float]:
    """R^(k)(x0), k = 0..10, from raw derivatives d[k] = f^(k)(x0)."""
    f, f1, f2, f3, f4, f5, f6, f7, f8, f9 = (float(v) for v in d[:10])
    R2 = 2 * f1 / f
    R3 = 6 * f2 / f
    R4 = 2 / f**2 * (7 * f3 * f + 6 * f1 * f2)
    R5 = 30 * (f * f4 + 2 * f2**2 + 2 * f3 * f1) / f**2
    R6 = (
        62 * f5 * f**2
        + 20 * (28 * f * f3 * f2 + 3 * f3 * f1**2 + f1 * (11 * f * f4 + 9 * f2**2))
    ) / f**3
    R7 = (14 / f**3) * (
        9 * f6 * f**2
        + 10 * (
            9 * f2**3
            + 4 * f4 * f1**2
            + 5 * f * (2 * f3**2 + f5 * f1)
            + (15 * f * f4 + 23 * f3 * f1) * f2
        )
    )
    R8 = (
        254 * f7 * f**3
        + 28 * (
            20 * f4 * f1**3
            + f * (251 * f * f5 * f2 + 5 * f3 * (81 * f * f4 + 199 * f2**2))
            + 5 * f1**2 * (23 * f * f5 + 32 * f3 * f2)
            + f1 * (180 * f2**3 + f * (73 * f * f6 + 455 * f3**2) + 715 * f * f4 * f2)
        )
    ) / f**4
    R9 = (
        510 * f8 * f**3
        + 84 * (
            540 * f2**4
            + 90 * f5 * f1**3
            + 6 * (29 * f * f6 + 75 * f3**2) * f1**2
            + f**2 * (295 * f4**2 + 488 * f3 * f5)
            + f * (67 * f * f7 + 1820 * f3 * f4) * f1
            + 270 * (7 * f * f4 + 9 * f3 * f1) * f2**2
            + 2 * (405 * f4 * f1**2 + f * (130 * f * f6 + 1235 * f3**2 + 603 * f5 * f1)) * f2
        )
    ) / f**4
    R10 = (2 / f**5) * (
        511 * f9 * f**4
        + 3780 * f5 * f1**4
        + 252 * f1**3 * (117 * f * f6 + 75 * f3**2 + 175 * f4 * f2)
        + 12 * f * (
            78330 * f3 * f2**3
            + 7 * f * (3170 * f3**3 + 4647 * f5 * f2**2 + 14440 * f4 * f3 * f2)
            + f**2 * (2679 * f7 * f2 + 5726 * f3 * f6 + 8029 * f4 * f5)
        )
        + 42 * f1**2 * (
            7158 * f * f5 * f2
            + 4350 * f3 * f2**2
            + f * (683 * f * f7 + 9530 * f3 * f4)
        )
        + 6 * f1 * (
            18900 * f2**4
            + 158340 * f * f4 * f2**2
            + 14 * f * (2648 * f * f6 + 13805 * f3**2) * f2
            + f**2 * (1237 * f * f8 + 38115 * f4**2 + 64974 * f3 * f5)
        )
    )
    return [math.nan, 2.0, R2, R3, R4, R5, R6, R7, R8, R9, R10]


def taylor_closed_form(f: ExprAst, x0: float, m2: int = CLOSED_FORM_MAX_ORDER) -> DoubleAngleSeries:
    """Same coefficients as :func:`taylor_general`, from explicit derivative formulas.

    Only defined through order 10.  Kept as an independent check on the
    recursion.
    """
    if m2 > CLOSED_FORM_MAX_ORDER:
        raise OrderTooHigh(f"closed-form route supports m2 <= {CLOSED_FORM_MAX_ORDER}, got {m2}")
    if m2 < 1:
        raise ValueError("m2 must be >= 1")
    x0 = float(x0)
    _f0(f, x0)
    raw = eval_jet(f, variable(x0, 9)).derivatives()
    derivs = _closed_form_derivatives(raw)
    r = np.array([x0] + [derivs[k] / math.factorial(k) for k in range(1, m2 + 1)])
    r.setflags(write=False)
    return DoubleAngleSeries(x0, r)


def eval_R(series: DoubleAngleSeries, x: float) -> float:
    return horner(series.coeffs, x - series.x0)


def iterate_R(evaluator: Callable[[float], float], x: float, n: int) -> float:
    """Apply ``evaluator`` n times.  Failures carry the 1-based iteration index."""
    if n < 0:
        raise ValueError("n must be >= 0")
    for i in range(n):
        try:
            x = evaluator(x)
        except ArithmeticError as exc:
            raise IterationError(exc, i + 1) from exc
        if not math.isfinite(x):
            exc = DomainError(f"R produced a non-finite value ({x})")
            raise IterationError(exc, i + 1) from exc
    return x


def residual_jet(f: ExprAst, series: DoubleAngleSeries) -> np.ndarray:
    """Coefficients of 2 f(R(u)) - R'(u) f(u) through order m2 - 1."""
    m = series.order
    x0 = series.x0
    R = Jet(x0, series.coeffs)
    lhs = 2.0 * eval_jet(f, R).coeffs[:m]
    dR = R.derivative()
    fu = eval_jet(f, variable(x0, m)).truncate(m - 1)
    rhs = (dR * fu).coeffs
    return lhs - rhs

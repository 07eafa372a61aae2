"""Known addition and double-angle formulas, plus R(x, y) = phi(phi^-1(x) + phi^-1(y))."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

from .errors import (
    DivisionByZero,
    DomainError,
    NotMonotone,
    OutsideAdditionDomain,
    PoleError,
)
from .expr import ExprAst


@dataclass(frozen=True)
class AdditionFormula:
    """An explicit addition formula (bivariate) or double-angle formula.

    ``box`` is a square [lo, hi] of (x, y) values where the formula is known
    to be valid; ``solution``/``t_range`` give the generating function when it
    is known in closed form.
    """

    name: str
    arity: str  # "bivariate" | "double-angle"
    evaluator: Callable[..., float]
    validity: str
    x0: float
    box: tuple[float, float] | None = None
    solution: Optional[Callable[[float], float]] = None
    t_range: tuple[float, float] | None = None
    ast: Optional[ExprAst] = None
    meta: dict = field(default_factory=dict)

    def __call__(self, *args: float) -> float:
        return self.evaluator(*args)


def _real_root(value: float, n: int) -> float:
    if value > 0:
        return value ** (1.0 / n)
    if value == 0:
        return 0.0
    if n % 2 == 0:
        raise DomainError(f"even root of negative number {value}")
    return -((-value) ** (1.0 / n))


def exponential_formula() -> AdditionFormula:
    """R(x, y) = x y, the addition formula of exp."""
    return AdditionFormula(
        "exponential", "bivariate", lambda x, y: x * y, "all real x, y", 1.0,
        box=(0.5, 2.0), solution=math.exp, t_range=(-0.7, 0.7),
    )


def additive_formula(rate: float = 1.0) -> AdditionFormula:
    """R(x, y) = x + y, the addition formula of phi(t) = rate * t."""
    return AdditionFormula(
        "additive", "bivariate", lambda x, y: x + y, "all real x, y", 0.0,
        box=(-1.0, 1.0), solution=lambda t: rate * t, t_range=(-1.0, 1.0),
        meta={"rate": rate},
    )


def power_rule_addition(n: int, x0: float = 1.0) -> AdditionFormula:
    """Addition formula of the solution of x' = x^(n+1), x(0) = x0.

    R(x, y) = x0 x y / (x0^n (x^n + y^n) - x^n y^n)^(1/n)
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    x0 = float(x0)
    if x0 == 0.0:
        raise ValueError("x0 must be non-zero")
    x0n = x0**n

    def R(x: float, y: float) -> float:
        xn, yn = x**n, y**n
        rad = x0n * (xn + yn) - xn * yn
        if rad == 0.0:
            raise PoleError(f"R({x}, {y}) sits on a pole")
        if rad < 0.0 and n % 2 == 0:
            raise DomainError(f"negative radicand {rad} for even n = {n}")
        return x0 * x * y / _real_root(rad, n)

    def x_of_t(t: float) -> float:
        base = 1.0 - n * x0n * t
        if base <= 0.0:
            raise PoleError(f"t = {t} beyond the blow-up time")
        return x0 / base ** (1.0 / n)

    blow_up = 1.0 / (n * x0n) if x0n > 0 else math.inf
    lo, hi = sorted((0.5 * x0, 1.5 * x0))
    return AdditionFormula(
        f"power_rule(n={n})", "bivariate", R,
        "x0^n (x^n + y^n) > x^n y^n (pole where equal)", x0,
        box=(lo, hi), solution=x_of_t,
        t_range=(-0.4 * blow_up, 0.4 * blow_up) if math.isfinite(blow_up) else None,
        meta={"n": n},
    )


def root_rule_addition(n: int, x0: float = 1.0) -> AdditionFormula:
    """Addition formula of the solution of x' = x^(1/(n+1)), x(0) = x0 > 0.

    R(x, y) = (x^p - x0^p + y^p)^(1/p) with p = n/(n+1).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    x0 = float(x0)
    if x0 <= 0.0:
        raise ValueError("x0 must be positive")
    p = n / (n + 1)
    x0p = x0**p

    def R(x: float, y: float) -> float:
        if x < 0.0 or y < 0.0:
            raise DomainError("root rule needs x, y >= 0")
        s = x**p - x0p + y**p
        if s < 0.0:
            raise DomainError(f"inner sum {s} is negative")
        return s ** (1.0 / p)

    def x_of_t(t: float) -> float:
        base = x0p + p * t
        if base < 0.0:
            raise DomainError(f"t = {t} before the solution reaches zero")
        return base ** (1.0 / p)

    t_min = -x0p / p
    return AdditionFormula(
        f"root_rule(n={n})", "bivariate", R, "x, y >= 0 and x^p + y^p >= x0^p", x0,
        box=(0.6 * x0, 2.0 * x0), solution=x_of_t, t_range=(0.3 * t_min, 1.0),
        meta={"n": n, "p": p},
    )


def example1_double(x0: float = 1.0) -> AdditionFormula:
    """Double-angle formula R(x) = x0 x / (2 x0 - x) for x' = x^2."""
    x0 = float(x0)
    if x0 == 0.0:
        raise ValueError("x0 must be non-zero")

    def R(x: float) -> float:
        den = 2.0 * x0 - x
        if den == 0.0:
            raise PoleError(f"pole of the double-angle formula at x = {x}")
        return x0 * x / den

    return AdditionFormula("example1_double", "double-angle", R, "x != 2 x0", x0)


def weierstrass_double(epsilon: float, as_printed: bool = False) -> AdditionFormula:
    """Exact double-angle formula for x' = sqrt(4x^3 - 13x/12 - 35/216), x0 = -5/12 + eps.

    With A = 864x^3 - 234x - 35, B = 144x^2 - 168x - 59, P2 = 144x^2 + 120x - 11,
    P3 = 12x - 7, alpha = sqrt(1 - eps), beta = 2 sqrt(6 eps - 24 eps^2)::

        R(x) = 7/12 - ((alpha P2 (P2 - 6 P3) - beta sqrt(A) B) / (P2^2 - 96 eps A))^2

    This follows from dn(2s - delta) with dn(delta)^2 = 1 - eps and reproduces
    x(2t) = R(x(t)) to rounding error.  ``as_printed=True`` gives the variant
    with P1 = sqrt(A B^2) entering as ``+ beta P1`` and ``- 96 eps P1^2``; that
    one misses the fixed point, R(x0) - x0 ~ 8 eps, and is kept only for
    comparison.
    """
    if not 0.0 < epsilon <= 0.25:
        raise ValueError("epsilon must lie in (0, 1/4]")
    eps = float(epsilon)
    alpha = math.sqrt(1.0 - eps)
    beta = 2.0 * math.sqrt(max(6.0 * eps - 24.0 * eps * eps, 0.0))

    def R(x: float) -> float:
        A = 864.0 * x**3 - 234.0 * x - 35.0
        B = 144.0 * x**2 - 168.0 * x - 59.0
        P2 = 144.0 * x**2 + 120.0 * x - 11.0
        P3 = 12.0 * x - 7.0
        if as_printed:
            rad = A * B * B
            if rad < 0.0:
                raise DomainError(f"P1 radicand {rad} < 0 at x = {x}")
            P1 = math.sqrt(rad)
            den = P2 * P2 - 96.0 * eps * P1 * P1
            num = alpha * P2 * (P2 - 6.0 * P3) + beta * P1
        else:
            if A < 0.0:
                # A is 216 (x')^2; rounding can push it a hair below zero at x0
                if A > -1e-9:
                    A = 0.0
                else:
                    raise DomainError(f"radicand {A} < 0 at x = {x}")
            den = P2 * P2 - 96.0 * eps * A
            num = alpha * P2 * (P2 - 6.0 * P3) - beta * math.sqrt(A) * B
        if den == 0.0:
            raise DivisionByZero(f"denominator vanishes at x = {x}")
        inner = num / den
        return 7.0 / 12.0 - inner * inner

    return AdditionFormula(
        "weierstrass_double" + ("_as_printed" if as_printed else ""), "double-angle", R,
        "864x^3 - 234x - 35 >= 0", -5.0 / 12.0 + eps,
        meta={"epsilon": eps, "alpha": alpha, "beta": beta},
    )


# -- numeric construction -----------------------------------------------------------

@dataclass(frozen=True)
class AdditionDomain:
    """Interval I = (a, b) of phi and the induced addition domain D_I."""

    a: float
    b: float
    lo: float = math.nan  # image of I
    hi: float = math.nan
    inverse: Optional[Callable[[float], float]] = None

    def contains_time(self, s: float) -> bool:
        return self.a < s < self.b

    def contains(self, xi: float, eta: float) -> bool:
        """(xi, eta) in D_I, i.e. phi^-1(xi) + phi^-1(eta) in I."""
        if self.inverse is None:
            raise ValueError("domain has no inverse attached; build it via construct_numeric")
        try:
            s = self.inverse(xi) + self.inverse(eta)
        except OutsideAdditionDomain:
            return False
        return self.contains_time(s)


class _NumericInverse:
    def __init__(self, phi, ts: np.ndarray, vals: np.ndarray, tol: float):
        self.phi = phi
        self.tol = tol
        self.increasing = vals[-1] > vals[0]
        order = slice(None) if self.increasing else slice(None, None, -1)
        self.vals = vals[order]
        self.ts = ts[order]
        self.guess = PchipInterpolator(self.vals, self.ts, extrapolate=False)
        self.lo, self.hi = float(self.vals[0]), float(self.vals[-1])

    def __call__(self, v: float) -> float:
        if not self.lo <= v <= self.hi:
            raise OutsideAdditionDomain(f"{v} is outside the image [{self.lo}, {self.hi}]")
        i = int(np.searchsorted(self.vals, v))
        if i < len(self.vals) and self.vals[i] == v:
            return float(self.ts[i])
        if self.phi is None:
            return float(self.guess(v))
        i = min(max(i, 1), len(self.vals) - 1)
        ta, tb = sorted((float(self.ts[i - 1]), float(self.ts[i])))
        return brentq(lambda t: self.phi(t) - v, ta, tb, xtol=self.tol, rtol=1e-15)


def construct_numeric(
    phi,
    domain: AdditionDomain | tuple[float, float],
    samples: int = 4097,
    tol: float = 1e-13,
) -> AdditionFormula:
    """R(x, y) = phi(phi^-1(x) + phi^-1(y)) for a strictly monotone phi on I.

    ``phi`` is a callable (sampled on a uniform grid of ``samples`` points,
    inverse refined by bracketed root-finding to ``tol``) or a pair of arrays
    ``(t, phi(t))`` (inverse and forward map by monotone cubic interpolation).
    """
    if isinstance(domain, AdditionDomain):
        a, b = domain.a, domain.b
    else:
        a, b = domain
    if callable(phi):
        ts = np.linspace(a, b, samples)
        vals = np.array([phi(t) for t in ts])
        forward = phi
    else:
        ts, vals = (np.asarray(v, dtype=float) for v in phi)
        forward_interp = PchipInterpolator(ts, vals, extrapolate=False)
        forward = lambda t: float(forward_interp(t))  # noqa: E731
        phi = None
    d = np.diff(vals)
    if not (np.all(d > 0) or np.all(d < 0)):
        raise NotMonotone("phi is not strictly monotone on the sample grid")
    inverse = _NumericInverse(phi, ts, vals, tol)
    dom = AdditionDomain(a, b, inverse.lo, inverse.hi, inverse)
    phi0 = float(forward(0.0)) if a < 0.0 < b else math.nan

    def R(x: float, y: float) -> float:
        s = inverse(x) + inverse(y)
        if not dom.contains_time(s):
            raise OutsideAdditionDomain(f"phi^-1(x) + phi^-1(y) = {s} not in ({a}, {b})")
        return float(forward(s))

    return AdditionFormula(
        "numeric", "bivariate", R, f"phi^-1(x) + phi^-1(y) in ({a}, {b})", phi0,
        box=(inverse.lo, inverse.hi), meta={"domain": dom},
    )


def standard_formulas() -> list[AdditionFormula]:
    """Every bivariate catalog entry with a documented box, for checker sweeps."""
    tanh = construct_numeric(math.tanh, (-1.5, 1.5))
    # the full image reaches the edge of D_I; nested evaluations need a margin
    tanh = replace(tanh, name="numeric(tanh)", box=(-0.5, 0.5), t_range=(-0.6, 0.6))
    return [
        exponential_formula(),
        additive_formula(),
        additive_formula(2.5),
        power_rule_addition(1),
        power_rule_addition(2),
        power_rule_addition(3, 0.8),
        root_rule_addition(1),
        root_rule_addition(2),
        tanh,
    ]

"""Ground truth: closed-form solutions, Jacobi dn, and classical integrators."""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

from scipy.optimize import brentq

from .errors import MinStepReached, PoleError, RootNotBracketed, StepDomainError

M_EXAMPLE2 = 0.25


@dataclass
class ReferenceSolution:
    evaluator: Callable[[float], float]
    domain: tuple[float, float]
    kind: str  # "closed-form" | "integrated"
    accuracy: float = 0.0
    meta: dict = field(default_factory=dict)

    def __call__(self, t: float) -> float:
        return self.evaluator(t)


# -- closed forms ----------------------------------------------------------------

def closed_form_example1(x0: float = 1.0) -> ReferenceSolution:
    """x(t) = x0 / (1 - x0 t), the solution of x' = x^2."""
    x0 = float(x0)
    if x0 == 0.0:
        raise ValueError("x0 must be non-zero")
    pole = 1.0 / x0

    def x(t: float) -> float:
        den = 1.0 - x0 * t
        if den == 0.0:
            raise PoleError(f"t = {t} is the asymptote of x0/(1 - x0 t)")
        return x0 / den

    domain = (-math.inf, pole) if x0 > 0 else (pole, math.inf)
    return ReferenceSolution(x, domain, "closed-form", 0.0, {"pole": pole})


# -- elliptic functions ------------------------------------------------------------

def agm(a: float, b: float) -> float:
    for _ in range(64):
        if abs(a - b) <= 1e-16 * abs(a):
            break
        a, b = 0.5 * (a + b), math.sqrt(a * b)
    return a


def ellipk(m: float) -> float:
    """Complete elliptic integral of the first kind K(m), parameter convention."""
    if not 0.0 <= m < 1.0:
        raise ValueError("K(m) needs 0 <= m < 1")
    return math.pi / (2.0 * agm(1.0, math.sqrt(1.0 - m)))


def jacobi_sn_cn_dn(u: float, m: float) -> tuple[float, float, float]:
    """Jacobi sn, cn, dn by the descending Landen (AGM) scheme."""
    if not 0.0 <= m <= 1.0:
        raise ValueError("parameter m must lie in [0, 1]")
    u = float(u)
    if m == 0.0:
        return math.sin(u), math.cos(u), 1.0
    if m == 1.0:
        s = 1.0 / math.cosh(u)
        return math.tanh(u), s, s
    period = 4.0 * ellipk(m)
    u = u - period * round(u / period)

    a = [1.0]
    c = [math.sqrt(m)]
    b = math.sqrt(1.0 - m)
    while abs(c[-1]) > 1e-16 * a[-1] and len(a) < 40:
        an = 0.5 * (a[-1] + b)
        c.append(0.5 * (a[-1] - b))
        b = math.sqrt(a[-1] * b)
        a.append(an)
    n = len(a) - 1
    phi = (2.0**n) * a[n] * u
    phis = [phi]
    for k in range(n, 0, -1):
        phi = 0.5 * (phi + math.asin(c[k] / a[k] * math.sin(phi)))
        phis.append(phi)
    phi0 = phis[-1]
    sn = math.sin(phi0)
    cn = math.cos(phi0)
    # dn > 0 for m < 1 and 1 - m sn^2 >= 1 - m: no cancellation, unlike the
    # cn / cos(phi1 - phi0) ratio which degrades near u = K
    dn = math.sqrt(1.0 - m * sn * sn)
    return sn, cn, dn


def jacobi_dn(u: float, m: float) -> float:
    if u == 0.0:
        return 1.0
    return jacobi_sn_cn_dn(u, m)[2]


def jacobi_sn(u: float, m: float) -> float:
    return jacobi_sn_cn_dn(u, m)[0]


def example2_delta(epsilon: float, m: float = M_EXAMPLE2) -> float:
    """Shift delta in (0, K] with dn(delta|m)^2 = 1 - epsilon.

    Solved in the equivalent form m sn(delta)^2 = epsilon, which keeps full
    relative accuracy for tiny epsilon.
    """
    if not 0.0 < epsilon <= m:
        raise RootNotBracketed(
            f"epsilon = {epsilon} outside (0, {m}]: 1 - dn^2 never reaches it"
        )
    K = ellipk(m)
    target = math.sqrt(epsilon / m)
    if target >= 1.0:
        return K
    g = lambda d: jacobi_sn(d, m) - target  # noqa: E731
    return brentq(g, 0.0, K, xtol=1e-14 * max(target, 1e-300), rtol=1e-15, maxiter=400)


def closed_form_example2(epsilon: float, m: float = M_EXAMPLE2) -> ReferenceSolution:
    """x(t) = 7/12 - dn(t + delta|1/4)^2 for x' = sqrt(4x^3 - 13x/12 - 35/216).

    Evaluated as -5/12 + m sn^2 (identical by dn^2 + m sn^2 = 1) so the
    distance to the initial value is not lost to cancellation.
    """
    delta = example2_delta(epsilon, m)
    K = ellipk(m)

    def x(t: float) -> float:
        sn = jacobi_sn(t + delta, m)
        return -5.0 / 12.0 + m * sn * sn

    return ReferenceSolution(
        x, (-math.inf, math.inf), "closed-form", 1e-14,
        {"delta": delta, "K": K, "epsilon": epsilon, "half_period": K - delta},
    )


# -- integrators ----------------------------------------------------------------------

@dataclass(frozen=True)
class CallableProblem:
    """Minimal IVP wrapper around a plain callable right-hand side."""

    rhs: Callable[[float], float]
    x0: float
    label: str = ""


def _rhs(problem) -> Callable[[float], float]:
    rhs = problem.rhs

    def f(x: float) -> float:
        try:
            v = rhs(x)
        except ArithmeticError as exc:
            raise StepDomainError(f"f({x!r}) failed: {exc}") from exc
        if not math.isfinite(v):
            raise StepDomainError(f"f({x!r}) = {v}")
        return v

    return f


class _Dense:
    """Cubic Hermite interpolation through (t, x, x') triples."""

    def __init__(self, ts, xs, ds):
        if ts[-1] < ts[0]:
            ts, xs, ds = ts[::-1], xs[::-1], ds[::-1]
        self.ts, self.xs, self.ds = ts, xs, ds

    def __call__(self, t: float) -> float:
        ts = self.ts
        if not ts[0] - 1e-12 * max(1.0, abs(ts[0])) <= t <= ts[-1] + 1e-12 * max(1.0, abs(ts[-1])):
            raise ValueError(f"t = {t} outside integrated range [{ts[0]}, {ts[-1]}]")
        i = bisect.bisect_left(ts, t)
        if i < len(ts) and ts[i] == t:
            return self.xs[i]
        i = min(max(i, 1), len(ts) - 1)
        t0, t1 = ts[i - 1], ts[i]
        h = t1 - t0
        s = (t - t0) / h
        x0, x1, d0, d1 = self.xs[i - 1], self.xs[i], self.ds[i - 1], self.ds[i]
        h00 = (1 + 2 * s) * (1 - s) ** 2
        h10 = s * (1 - s) ** 2
        h01 = s * s * (3 - 2 * s)
        h11 = s * s * (s - 1)
        return h00 * x0 + h10 * h * d0 + h01 * x1 + h11 * h * d1


def rk4_solve(problem, t_end: float, h: float) -> ReferenceSolution:
    """Classical fixed-step RK4 from t = 0 to ``t_end`` (either direction).

    The step is shrunk to ``|t_end| / ceil(|t_end| / h)`` so the last step
    lands exactly on ``t_end``.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    f = _rhs(problem)
    x = float(problem.x0)
    steps = max(1, math.ceil(abs(t_end) / h - 1e-12)) if t_end != 0 else 0
    dt = t_end / steps if steps else 0.0
    ts, xs, ds = [0.0], [x], [f(x) if steps else 0.0]
    t = 0.0
    for i in range(steps):
        k1 = ds[-1]
        k2 = f(x + 0.5 * dt * k1)
        k3 = f(x + 0.5 * dt * k2)
        k4 = f(x + dt * k3)
        x = x + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        t = t_end if i == steps - 1 else (i + 1) * dt
        ts.append(t)
        xs.append(x)
        ds.append(f(x))
    dense = _Dense(ts, xs, ds)
    lo, hi = sorted((0.0, float(t_end)))
    return ReferenceSolution(dense, (lo, hi), "integrated", math.nan,
                             {"steps": steps, "h": abs(dt), "final": x})


# Dormand-Prince 5(4) tableau
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
# difference between 5th-order and embedded 4th-order weights
_E = (
    35 / 384 - 5179 / 57600,
    0.0,
    500 / 1113 - 7571 / 16695,
    125 / 192 - 393 / 640,
    -2187 / 6784 + 92097 / 339200,
    11 / 84 - 187 / 2100,
    -1 / 40,
)


def dp45_solve(
    problem,
    t_end: float,
    rtol: float = 1e-10,
    atol: float = 1e-12,
    t_eval: Sequence[float] | None = None,
    h0: float | None = None,
    max_steps: int = 1_000_000,
) -> ReferenceSolution:
    """Adaptive Dormand-Prince 4(5) with PI step-size control.

    Steps are clipped to land exactly on every point of ``t_eval`` (which must
    lie between 0 and ``t_end``); those values are then returned exactly by the
    dense evaluator, other times use cubic Hermite interpolation.
    ``accuracy`` in the result is the sum of accepted local error estimates.
    """
    if rtol <= 0 or atol <= 0:
        raise ValueError("rtol and atol must be positive")
    f = _rhs(problem)
    x = float(problem.x0)
    t_end = float(t_end)
    lo, hi = sorted((0.0, t_end))
    if t_end == 0.0:
        return ReferenceSolution(lambda t: x, (0.0, 0.0), "integrated", 0.0,
                                 {"steps": 0, "final": x})
    direction = 1.0 if t_end > 0 else -1.0
    stops = sorted({float(s) for s in (t_eval or []) if lo <= s <= hi} | {t_end},
                   key=lambda s: direction * s)
    # stops closer than rounding noise would force a sub-ulp step; keep one of each cluster
    merged: list[float] = []
    for s in stops:
        if abs(s) <= 1e-13 or (merged and abs(s - merged[-1]) <= 1e-13 * max(1.0, abs(s))):
            continue
        merged.append(s)
    stops = merged

    t = 0.0
    k1 = f(x)
    ts, xs, ds = [0.0], [x], [k1]
    span = abs(t_end)
    if h0 is None:
        h = min(span, 0.01 * (abs(x) + atol) / max(abs(k1), 1e-12), 0.1 * span)
        h = max(h, 1e-6 * span)
    else:
        h = h0
    err_prev = 1e-4
    err_sum = 0.0
    stop_i = 0
    n_steps = n_reject = 0
    safety, beta, alpha = 0.9, 0.04, 0.2 - 0.75 * 0.04
    while stop_i < len(stops):
        if n_steps + n_reject > max_steps:
            raise MinStepReached(f"exceeded {max_steps} steps at t = {t}")
        target = stops[stop_i]
        remaining = abs(target - t)
        landing = h >= remaining
        step = remaining if landing else h
        if step < 1e-14 * max(1.0, abs(t)):
            raise MinStepReached(f"step size underflow at t = {t} (x = {x})")
        dt = direction * step
        k = [k1]
        try:
            for s in range(1, 7):
                xi = x + dt * sum(a * kj for a, kj in zip(_A[s], k))
                k.append(f(xi))
        except StepDomainError:
            h = 0.5 * step
            n_reject += 1
            continue
        x_new = x + dt * sum(b * kj for b, kj in zip(_B, k))
        err_abs = abs(dt * sum(e * kj for e, kj in zip(_E, k)))
        scale = atol + rtol * max(abs(x), abs(x_new))
        err = err_abs / scale
        if err <= 1.0 and math.isfinite(x_new):
            t = target if landing else t + dt
            x = x_new
            k1 = k[6]
            ts.append(t)
            xs.append(x)
            ds.append(k1)
            err_sum += err_abs
            n_steps += 1
            if landing:
                stop_i += 1
            if err == 0.0:
                fac = 5.0
            else:
                fac = safety * err**-alpha * err_prev**beta
                fac = min(5.0, max(0.2, fac))
            err_prev = max(err, 1e-4)
            h = step * fac if not landing else max(h, step * fac)
        else:
            fac = max(0.2, safety * err**-0.2) if math.isfinite(err) else 0.2
            h = step * min(fac, 1.0)
            n_reject += 1
    dense = _Dense(ts, xs, ds)
    return ReferenceSolution(dense, (lo, hi), "integrated", err_sum,
                             {"steps": n_steps, "rejected": n_reject, "final": x})

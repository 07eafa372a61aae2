"""The duplication algorithm.

To approximate x(t) for t far from 0, halve t until t / 2^n lies in the seed
neighbourhood V0 = [-r0, r0], evaluate the Taylor polynomial of x there, and
apply the double-angle formula R n times:

    x(t) ~ R^n(x_m1(t / 2^n))

R is either an exact formula or its order-m2 Taylor polynomial at x0.  A
polygonal approximant linearly interpolates these values on a uniform
partition of an interval D.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .double_angle import DEFAULT_M2, DoubleAngleSeries, iterate_R, taylor_general
from .errors import ConfigError, IterationError, NumericError, SeedOutsideV0
from .ivp import DEFAULT_M1, IvpProblem, SolutionSeries, solve_taylor

DEFAULT_R0 = 0.1
ERROR_FLOOR = 1e-13
R_SOURCES = ("auto", "exact", "taylor")


@dataclass(frozen=True)
class DuplicationConfig:
    """Parameters of one duplication run.

    With ``points=None`` the partition of ``interval`` has 2^n + 1 nodes and
    every node uses n duplications (the coupled scheme).  With ``points=N``
    the partition has N nodes and each node uses the smallest n with
    |t_i| / 2^n <= r0.
    """

    n: int | None = None
    m1: int = DEFAULT_M1
    m2: int = DEFAULT_M2
    r0: float = DEFAULT_R0
    interval: tuple[float, float] = (0.0, 1.0)
    r_source: str = "auto"
    points: int | None = None
    exact_R: Callable[[float], float] | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        a, b = self.interval
        if not b >= a:
            raise ConfigError(f"interval [{a}, {b}] is empty")
        if self.m1 < 1 or self.m2 < 1:
            raise ConfigError("m1 and m2 must be >= 1")
        if not self.r0 > 0:
            raise ConfigError("r0 must be positive")
        if self.r_source not in R_SOURCES:
            raise ConfigError(f"r_source must be one of {R_SOURCES}")
        if self.points is None:
            if self.n is None or self.n < 0:
                raise ConfigError("coupled mode needs n >= 0")
            reach = max(abs(a), abs(b)) / 2.0**self.n
            if reach > self.r0 * (1 + 1e-12):
                raise SeedOutsideV0(
                    f"max |t|/2^n = {reach:.6g} exceeds r0 = {self.r0} "
                    f"for interval [{a}, {b}] with n = {self.n}"
                )
        elif self.points < 1:
            raise ConfigError("points must be >= 1")

    @property
    def effective_order(self) -> int:
        """Local order min(m1+1, m2+1) of R^n_m2(x_m1(t/2^n))."""
        if self.r_source == "exact":
            return self.m1 + 1
        return min(self.m1 + 1, self.m2 + 1)

    def nodes(self) -> np.ndarray:
        a, b = self.interval
        if self.points is None:
            count = 2**self.n + 1
        else:
            count = self.points
        if count == 1:
            return np.array([float(a)])
        return a + (b - a) * (np.arange(count) / (count - 1))

    def halvings(self, t: float) -> int:
        if self.points is None:
            return self.n
        return min_halvings(t, self.r0)

    def echo(self) -> dict:
        return {
            "n": self.n, "m1": self.m1, "m2": self.m2, "r0": self.r0,
            "interval": list(self.interval), "r_source": self.r_source,
            "points": self.points,
        }


def min_halvings(t: float, r0: float) -> int:
    n = 0
    while abs(t) / 2.0**n > r0:
        n += 1
    return n


class Duplicator:
    """Caches the seed series and R evaluator for repeated evaluations."""

    def __init__(self, problem: IvpProblem, config: DuplicationConfig):
        self.problem = problem
        self.config = config
        self.seed: SolutionSeries = solve_taylor(problem, config.m1)
        self.degenerate = self.seed.degenerate
        self.series: DoubleAngleSeries | None = None
        exact = config.exact_R or getattr(problem, "exact_R", None)
        source = config.r_source
        if source == "auto":
            source = "exact" if exact is not None else "taylor"
        if source == "exact" and exact is None:
            raise ConfigError("r_source 'exact' requested but no exact R is available")
        self.source = source
        if self.degenerate:
            self.R = lambda x: x
        elif source == "exact":
            self.R = exact
        else:
            self.series = taylor_general(problem.f, problem.x0, config.m2)
            self.R = self.series

    def at(self, t_hat: float, n: int | None = None) -> float:
        if self.degenerate:
            return self.problem.x0
        if n is None:
            n = self.config.halvings(t_hat)
        s = t_hat / 2.0**n
        if abs(s) > self.config.r0 * (1 + 1e-12):
            raise SeedOutsideV0(f"|t|/2^n = {abs(s):.6g} > r0 = {self.config.r0} (t = {t_hat}, n = {n})")
        seed = self.seed(s)
        if not math.isfinite(seed):
            raise NumericError(f"seed polynomial is non-finite at s = {s} (t = {t_hat})")
        try:
            return iterate_R(self.R, seed, n)
        except IterationError as exc:
            raise IterationError(exc.cause, exc.iteration, t_hat) from exc.cause


def approx_at(problem: IvpProblem, t_hat: float, config: DuplicationConfig) -> float:
    """R^n(x_m1(t_hat / 2^n)) for a single time."""
    return Duplicator(problem, config).at(t_hat)


@dataclass(frozen=True)
class PolygonalApprox:
    ts: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __call__(self, t):
        if np.ndim(t):
            return np.array([self._one(float(s)) for s in np.ravel(t)]).reshape(np.shape(t))
        return self._one(float(t))

    def _one(self, t: float) -> float:
        ts, vs = self.ts, self.values
        if len(ts) == 1:
            if t != ts[0]:
                raise ValueError("single-node approximant only defined at its node")
            return float(vs[0])
        if not ts[0] <= t <= ts[-1]:
            raise ValueError(f"t = {t} outside [{ts[0]}, {ts[-1]}]")
        i = int(np.searchsorted(ts, t, side="right")) - 1
        i = min(max(i, 0), len(ts) - 2)
        ti, tj = ts[i], ts[i + 1]
        # two-point Lagrange form on [t_i, t_{i+1}]
        return float(vs[i] * (t - tj) / (ti - tj) + vs[i + 1] * (ti - t) / (ti - tj))


def _thread_count(threads: int | None) -> int:
    if threads is None:
        env = os.environ.get("DUPSOLVE_THREADS")
        threads = int(env) if env else 1
    return max(1, threads)


def polygonal(problem: IvpProblem, config: DuplicationConfig, threads: int | None = None) -> PolygonalApprox:
    """Duplication values on the partition nodes, joined linearly."""
    dup = Duplicator(problem, config)
    ts = config.nodes()
    workers = _thread_count(threads)
    if workers == 1:
        values = [dup.at(float(t)) for t in ts]
    else:
        with ThreadPoolExecutor(workers) as pool:
            values = list(pool.map(lambda t: dup.at(float(t)), ts))
    return PolygonalApprox(ts, np.array(values), {"r_source": dup.source})


def max_error(approx: PolygonalApprox, reference: Callable[[float], float], dense: bool = True) -> float:
    """Max |P(t) - x(t)| over nodes, plus interval midpoints when ``dense``."""
    ts = approx.ts
    pts = list(ts)
    if dense and len(ts) > 1:
        pts += list(0.5 * (ts[1:] + ts[:-1]))
    err = np.abs(np.array([approx(t) - reference(t) for t in pts]))
    # a NaN anywhere must not hide behind max()
    return float(np.inf) if not np.all(np.isfinite(err)) else float(err.max())


@dataclass(frozen=True)
class ConvergenceStudy:
    order: float
    mesh: np.ndarray
    errors: np.ndarray
    used: np.ndarray


def convergence_study(
    problem: IvpProblem,
    reference: Callable[[float], float],
    ns: Sequence[int],
    interval: tuple[float, float],
    floor: float = ERROR_FLOOR,
    **config_kw,
) -> ConvergenceStudy:
    """Fit the slope of log(max error over D) against log(r / 2^n)."""
    if len(ns) < 3:
        raise ValueError("need at least three values of n")
    a, b = interval
    r = b - a
    mesh, errors = [], []
    for n in ns:
        cfg = DuplicationConfig(n=n, interval=interval, **config_kw)
        approx = polygonal(problem, cfg)
        mesh.append(r / 2.0**n)
        errors.append(max_error(approx, reference))
    mesh_a, err_a = np.array(mesh), np.array(errors)
    used = err_a >= floor
    if used.sum() < 2:
        raise ValueError("fewer than two errors above the floor; cannot fit an order")
    slope = np.polyfit(np.log(mesh_a[used]), np.log(err_a[used]), 1)[0]
    return ConvergenceStudy(float(slope), mesh_a, err_a, used)


def convergence_order(problem, reference, ns, interval, **kw) -> float:
    return convergence_study(problem, reference, ns, interval, **kw).order


def exact_interpolant(ts: np.ndarray, reference: Callable[[float], float]) -> PolygonalApprox:
    """Polygon through the exact values x(t_i); isolates interpolation error."""
    return PolygonalApprox(np.asarray(ts, float), np.array([reference(float(t)) for t in ts]))

"""Truncated Taylor series ("jets") of scalar functions.

A :class:`Jet` of order ``m`` about ``center`` stores the normalized Taylor
coefficients ``coeffs[k] = g^(k)(center) / k!`` for ``k = 0..m``.  All
arithmetic truncates back to the operands' order, so a chain of operations on
``variable(c, m)`` yields the order-``m`` jet of the composite function.
"""

from __future__ import annotations

import math
from fractions import Fraction
from numbers import Real

import numpy as np

from .errors import CenterMismatch, DivisionByZero, DomainError, OrderTooHigh

#: Horner composition is O(m^3); above this order it gets slow for no benefit.
MAX_COMPOSE_ORDER = 64


class Jet:
    __slots__ = ("center", "coeffs")
    # make numpy scalars defer to our reflected operators
    __array_ufunc__ = None

    def __init__(self, center: float, coeffs):
        c = np.array(coeffs, dtype=np.float64)
        if c.ndim != 1 or c.size == 0:
            raise ValueError("jet needs a non-empty 1-d coefficient array")
        c.setflags(write=False)
        self.center = float(center)
        self.coeffs = c

    @property
    def order(self) -> int:
        return self.coeffs.size - 1

    def __repr__(self) -> str:
        return f"Jet(center={self.center!r}, coeffs={self.coeffs.tolist()!r})"

    def __len__(self) -> int:
        return self.coeffs.size

    def __getitem__(self, k):
        return self.coeffs[k]

    def derivatives(self) -> np.ndarray:
        """Raw derivatives ``g^(k)(center)``."""
        fact = np.array([math.factorial(k) for k in range(self.coeffs.size)], dtype=float)
        return self.coeffs * fact

    # -- structural helpers -------------------------------------------------

    def _check(self, other: Jet) -> None:
        if other.coeffs.size != self.coeffs.size:
            raise CenterMismatch(f"order mismatch: {self.order} vs {other.order}")
        if other.center != self.center:
            raise CenterMismatch(f"center mismatch: {self.center} vs {other.center}")

    def _lift(self, other) -> Jet:
        if isinstance(other, Jet):
            self._check(other)
            return other
        if isinstance(other, (Real, np.floating, np.integer)):
            return constant(float(other), self.center, self.order)
        return NotImplemented

    def truncate(self, order: int) -> Jet:
        if order > self.order:
            raise ValueError("truncate cannot extend a jet")
        return Jet(self.center, self.coeffs[: order + 1])

    def derivative(self) -> Jet:
        """Jet of g' (one order lower)."""
        if self.order == 0:
            return Jet(self.center, [0.0])
        k = np.arange(1, self.coeffs.size, dtype=float)
        return Jet(self.center, self.coeffs[1:] * k)

    def evaluate(self, x: float) -> float:
        """Horner evaluation of the Taylor polynomial at ``x``."""
        return horner(self.coeffs, x - self.center)

    # -- arithmetic -----------------------------------------------------------

    def __add__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        return Jet(self.center, self.coeffs + o.coeffs)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        return Jet(self.center, self.coeffs - o.coeffs)

    def __rsub__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        return Jet(self.center, o.coeffs - self.coeffs)

    def __neg__(self):
        return Jet(self.center, -self.coeffs)

    def __mul__(self, other):
        if isinstance(other, (Real, np.floating, np.integer)):
            return Jet(self.center, self.coeffs * float(other))
        o = self._lift(other)
        if o is NotImplemented:
            return o
        n = self.coeffs.size
        return Jet(self.center, np.convolve(self.coeffs, o.coeffs)[:n])

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (Real, np.floating, np.integer)):
            if other == 0:
                raise DivisionByZero("jet divided by zero")
            return Jet(self.center, self.coeffs / float(other))
        o = self._lift(other)
        if o is NotImplemented:
            return o
        return _div(self.coeffs, o.coeffs, self.center)

    def __rtruediv__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        return _div(o.coeffs, self.coeffs, self.center)

    def __pow__(self, p):
        return power(self, p)


def _div(a: np.ndarray, b: np.ndarray, center: float) -> Jet:
    b0 = b[0]
    if b0 == 0.0:
        raise DivisionByZero("division by a jet with zero constant term")
    n = a.size
    d = np.zeros(n)
    for k in range(n):
        acc = a[k]
        if k:
            acc -= np.dot(b[1 : k + 1], d[k - 1 :: -1][:k])
        d[k] = acc / b0
    return Jet(center, d)


def horner(coeffs, u: float) -> float:
    # plain floats overflow to inf quietly; the callers check finiteness
    cs = coeffs.tolist() if isinstance(coeffs, np.ndarray) else list(coeffs)
    acc = 0.0
    u = float(u)
    for c in reversed(cs):
        acc = acc * u + c
    return float(acc)


def variable(center: float, order: int) -> Jet:
    """Jet of the identity function about ``center``: ``[center, 1, 0, ...]``."""
    if order < 1:
        raise ValueError("variable jet needs order >= 1")
    c = np.zeros(order + 1)
    c[0] = center
    c[1] = 1.0
    return Jet(center, c)


def constant(value: float, center: float, order: int) -> Jet:
    c = np.zeros(order + 1)
    c[0] = value
    return Jet(center, c)


def add(a: Jet, b: Jet) -> Jet:
    return a + b


def sub(a: Jet, b: Jet) -> Jet:
    return a - b


def mul(a: Jet, b: Jet) -> Jet:
    return a * b


def div(a: Jet, b: Jet) -> Jet:
    return a / b


def powi(a: Jet, n: int) -> Jet:
    """Integer power by repeated squaring; negative ``n`` goes through 1/a."""
    n = int(n)
    if n < 0:
        return powi(1.0 / a, -n)
    result = constant(1.0, a.center, a.order)
    base = a
    while n:
        if n & 1:
            result = result * base
        n >>= 1
        if n:
            base = base * base
    return result


def powq(a: Jet, p) -> Jet:
    """Real power ``a**p`` via the J.C.P. Miller recurrence.

    For non-integer ``p`` the constant term must be strictly positive.
    """
    p = Fraction(p) if not isinstance(p, float) else p
    if isinstance(p, Fraction) and p.denominator == 1:
        return powi(a, p.numerator)
    if isinstance(p, float) and p.is_integer():
        return powi(a, int(p))
    a0 = a.coeffs[0]
    if not a0 > 0.0:
        raise DomainError(f"non-integer power {p} of a jet with constant term {a0}")
    pf = float(p)
    c = a.coeffs
    n = c.size
    b = np.zeros(n)
    b[0] = a0**pf
    for k in range(1, n):
        j = np.arange(1, k + 1)
        b[k] = np.dot(((pf + 1.0) * j - k) * c[1 : k + 1], b[k - j]) / (k * a0)
    return Jet(a.center, b)


def sqrt(a: Jet) -> Jet:
    return powq(a, Fraction(1, 2))


def power(a: Jet, p) -> Jet:
    if isinstance(p, int) or (isinstance(p, Fraction) and p.denominator == 1):
        return powi(a, int(p))
    return powq(a, p)


def compose(outer: Jet, inner: Jet) -> Jet:
    """Jet of ``outer ∘ inner`` about ``inner.center``.

    ``inner.coeffs[0]`` must equal ``outer.center``; the outer polynomial is
    evaluated by Horner's rule at the shifted inner jet.
    """
    if outer.order != inner.order:
        raise CenterMismatch(f"order mismatch: {outer.order} vs {inner.order}")
    if inner.order > MAX_COMPOSE_ORDER:
        raise OrderTooHigh(f"compose supports order <= {MAX_COMPOSE_ORDER}")
    c = outer.center
    if not math.isclose(inner.coeffs[0], c, rel_tol=1e-12, abs_tol=1e-15):
        raise CenterMismatch(
            f"inner value {inner.coeffs[0]} does not match outer center {c}"
        )
    shifted = inner.coeffs.copy()
    shifted[0] = 0.0
    w = Jet(inner.center, shifted)
    acc = constant(outer.coeffs[-1], inner.center, inner.order)
    for coef in outer.coeffs[-2::-1]:
        acc = acc * w + float(coef)
    return acc

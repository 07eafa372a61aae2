"""Exception hierarchy shared by every dupsolve module.

Two families matter to callers: configuration problems (bad input, bad
config) and numeric failures (domains, poles, integrator breakdown).  The CLI
maps them to different exit codes.
"""

from __future__ import annotations


class DupsolveError(Exception):
    """Base class for all package errors."""


class ConfigError(DupsolveError):
    """Invalid user input or configuration."""


class NumericError(DupsolveError, ArithmeticError):
    """A numeric computation left its valid domain."""


# -- expression parsing ------------------------------------------------------

class ExprSyntaxError(ConfigError):
    """Malformed expression text.  ``offset`` is a byte offset into the source."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


class UnknownIdentifier(ExprSyntaxError):
    def __init__(self, name: str, offset: int):
        super().__init__(f"unknown identifier {name!r}", offset)
        self.name = name


# -- numeric domain ----------------------------------------------------------

class DomainError(NumericError):
    """Negative radicand, invalid real power, or similar."""


class DivisionByZero(DomainError, ZeroDivisionError):
    pass


class PoleError(DomainError):
    """Evaluation hit (or landed on) a pole of a formula."""


class CenterMismatch(DupsolveError, ValueError):
    """Jets with incompatible centers or orders were combined."""


# -- series / duplication ----------------------------------------------------

class DegenerateProblem(ConfigError):
    """f(x0) = 0: the solution is the constant x0 and R is not determined."""


class OrderTooHigh(ConfigError):
    pass


class SeedOutsideV0(ConfigError):
    """A halved time t/2^n falls outside the seed neighbourhood [-r0, r0]."""


class IterationError(NumericError):
    """Wraps a failure inside the n-fold iteration of R."""

    def __init__(self, cause: Exception, iteration: int, t: float | None = None):
        where = f" at t={t!r}" if t is not None else ""
        super().__init__(f"R iteration {iteration} failed{where}: {cause}")
        self.cause = cause
        self.iteration = iteration
        self.t = t


# -- catalog / checker -------------------------------------------------------

class OutsideAdditionDomain(DomainError):
    pass


class NotMonotone(ConfigError):
    pass


class EmptyGrid(ConfigError):
    pass


# -- reference integrators ---------------------------------------------------

class StepDomainError(NumericError):
    """The right-hand side failed to evaluate inside an integration step."""


class MinStepReached(NumericError):
    pass


class RootNotBracketed(NumericError):
    pass

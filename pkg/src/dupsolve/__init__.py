"""Solve autonomous scalar ODEs x' = f(x) by argument halving and doubling.

The solution near t = 0 comes from its Taylor polynomial; values further out
come from iterating the double-angle formula x(2t) = R(x(t)).
"""

from .catalog import (
    AdditionDomain,
    AdditionFormula,
    additive_formula,
    construct_numeric,
    example1_double,
    exponential_formula,
    power_rule_addition,
    root_rule_addition,
    standard_formulas,
    weierstrass_double,
)
from .checker import CheckReport, check_necessary, check_sufficient, derive_f
from .double_angle import DoubleAngleSeries, eval_R, iterate_R, taylor_closed_form, taylor_general
from .duplication import (
    DuplicationConfig,
    PolygonalApprox,
    approx_at,
    convergence_order,
    polygonal,
)
from .errors import (
    CenterMismatch,
    ConfigError,
    DegenerateProblem,
    DivisionByZero,
    DomainError,
    DupsolveError,
    EmptyGrid,
    ExprSyntaxError,
    IterationError,
    MinStepReached,
    NotMonotone,
    NumericError,
    OrderTooHigh,
    OutsideAdditionDomain,
    PoleError,
    RootNotBracketed,
    SeedOutsideV0,
    StepDomainError,
    UnknownIdentifier,
)
from .expr import ExprAst, eval_jet, eval_scalar, parse
from .ivp import IvpProblem, SolutionSeries, eval_series, solve_taylor
from .jet import Jet
from .reference import (
    ReferenceSolution,
    closed_form_example1,
    closed_form_example2,
    dp45_solve,
    jacobi_dn,
    rk4_solve,
)

__version__ = "0.1.0"

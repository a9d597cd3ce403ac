"""Delta-epsilon polynomial algebra for nonlinear discrete input-output systems."""

from .core_algebra import (
    DEOperator,
    DEPolynomial,
    MultiIndex,
    compare,
    de_dot,
    de_star,
    decompose,
    evaluate,
    measures,
    render_poly,
)
from .errors import (
    DeltaEpsError,
    InternalInvariantError,
    NoSolutionError,
    ParametricEvaluationError,
    ParseError,
    RuleConflictError,
    UndefinedMeasureError,
    ValidationError,
)
from .flf import FLFResult, derived_sets, evaluate_rule, flf, reconstruct
from .linear_tools import LinearDelta, causalize, diophantine, lin_gcd, phi, phi_inv, resultant
from .matching import ConstraintSet, FeedbackLaw, MatchOutcome, SearchBudget, gcd_values, mm, solve_constraints, synthesize
from .param_ring import ParamId, ParamPoly, Rule, parse_rules
from .simulator import (
    SystemDef,
    Trajectory,
    identical_init,
    simulate_autonomous,
    simulate_closed,
    simulate_open,
    verify_match,
)
from .cli_io import parse_linear, parse_poly, parse_system, render_report

__version__ = "0.1.0"

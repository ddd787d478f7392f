"""Level-set wave equation: operator, geometry, Huygens audit, geodesics and FD checks."""

from .errors import (
    CFLViolation,
    DivergentPath,
    ExprDomainError,
    ExprSyntaxError,
    LSWEError,
    NoConvergence,
    NumericalError,
    StationaryPoint,
    StationaryPointOnGrid,
    TimelikePath,
    ValidationError,
)
from .expr import PotentialExpr, evaluate, parse, serialize
from .surface import PotentialSurface, SurfaceGauge, first_order_coefficients, gauge
from .taylor import TaylorJet, derive
from .geometry import christoffels, curvature, metric
from .huygens import HuygensReport, condition_one, condition_two, huygens_report
from .waves import (
    CustomField,
    GaussianProfile,
    IVPField,
    LinearPhase,
    PolynomialProfile,
    ProgressingField,
    TabulatedProfile,
    apply_operator,
    eikonal_residual,
    ivp_solution,
    parse_profile,
    split_operator,
    transport_residual,
)
from .geodesics import (
    GeodesicPath,
    GeodesicState,
    connect,
    conserved_quantity,
    geodesic_distance,
    integrate_geodesic,
    steepest_ascent,
    world_function,
    world_function_local,
)
from .elementary import ElementaryPart, adjoint_residual, singular_part
from .fdsolver import Grid, FieldSnapshot, convergence_study, solve_ivp, wake_metric

__version__ = "0.1.0"

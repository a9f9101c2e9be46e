"""Maximum-entropy multipodal graphons with prescribed edge and triangle densities."""
from .core import (
    DensityReport,
    DomainError,
    MultipodalGraphon,
    ValidationError,
    canonical_order,
    central_moment,
    compact,
    density_report,
    edge_density,
    entropy,
    h,
    h_derivative,
    l2_distance,
    order_parameter,
    triangle_density,
    two_star_density,
)
from .named import (
    bipodal,
    bipodal_series,
    bipodal_series_params,
    constant_graphon,
    e0,
    f_of_ab,
    symmetric_bipodal,
    tripodal_counterexample,
)
from .optimizer import (
    ConstraintProblem,
    NonConvergenceError,
    OptimizerResult,
    SeriesInit,
    classify,
    el_certificate,
    functional_gradients,
    maximize_entropy,
)
from .spectral import Spectrum, spectrum, triangle_identity_residual

__version__ = "0.1.0"

__all__ = [
    "DensityReport",
    "DomainError",
    "MultipodalGraphon",
    "ValidationError",
    "canonical_order",
    "central_moment",
    "compact",
    "density_report",
    "edge_density",
    "entropy",
    "h",
    "h_derivative",
    "l2_distance",
    "order_parameter",
    "triangle_density",
    "two_star_density",
    "bipodal",
    "bipodal_series",
    "bipodal_series_params",
    "constant_graphon",
    "e0",
    "f_of_ab",
    "symmetric_bipodal",
    "tripodal_counterexample",
    "ConstraintProblem",
    "NonConvergenceError",
    "OptimizerResult",
    "SeriesInit",
    "classify",
    "el_certificate",
    "functional_gradients",
    "maximize_entropy",
    "Spectrum",
    "spectrum",
    "triangle_identity_residual",
]

"""Certified bounds on total variation and Kullback-Leibler divergences
between high-dimensional elliptical and Gamma-product laws."""

from .core import (
    BoundInterval,
    DivboundError,
    InternalCheckError,
    OracleError,
    PreconditionError,
    QuadratureError,
)
from .reduction import CovariancePair, DiagonalScales, reduce_pair
from .student_normal import (
    StudentNormalProblem,
    classify_regime,
    compute_n0,
    kl_exact_t_vs_normal,
    kl_reverse_bounds,
    tv_bounds_student_normal,
)
from .gamma_tv import GammaProductSpec, tv_estimate

__all__ = [
    "BoundInterval",
    "CovariancePair",
    "DiagonalScales",
    "DivboundError",
    "GammaProductSpec",
    "InternalCheckError",
    "OracleError",
    "PreconditionError",
    "QuadratureError",
    "StudentNormalProblem",
    "classify_regime",
    "compute_n0",
    "kl_exact_t_vs_normal",
    "kl_reverse_bounds",
    "reduce_pair",
    "tv_bounds_student_normal",
    "tv_estimate",
]

__version__ = "0.1.0"

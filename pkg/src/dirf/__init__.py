"""Directional tests for vector hypotheses in exponential-family models.

The test measures how far the observed sufficient statistic sits from its
expectation under the null, along the one-dimensional ray the data select,
as a ratio of two one-dimensional integrals of an exact line density.  For
the four models implemented here (two-group exponential rates, two-group
normal variances, linearly constrained Gaussian regression, multivariate
normal mean) that ratio collapses to a classical F-test, and both routes
are implemented so each can check the other.
"""

from .core import (
    MODELS,
    ComparisonStatistics,
    ExpFamilyModel,
    TestOutcome,
    build_centered_line,
    comparison_statistics,
    directional_test,
    get_model,
)
from .exceptions import (
    AccuracyError,
    DegeneracyError,
    DirfError,
    DomainError,
    ParseError,
    PerfectFitError,
    SingularityError,
)
from .numerics import FParams, SpdMatrix, f_cdf, f_sf, ln_gamma, reg_inc_beta
from .quadrature import (
    DirectionalResult,
    LineDensity,
    LinearFactors,
    QuadraticPower,
    directional_pvalue,
    integrate_line_density,
    linear_factors_density,
    quadratic_power_density,
)
from .simulate import CalibrationReport, SimConfig, ks_statistic, run_calibration

__version__ = "0.1.0"

__all__ = [
    "MODELS",
    "ComparisonStatistics",
    "ExpFamilyModel",
    "TestOutcome",
    "build_centered_line",
    "comparison_statistics",
    "directional_test",
    "get_model",
    "AccuracyError",
    "DegeneracyError",
    "DirfError",
    "DomainError",
    "ParseError",
    "PerfectFitError",
    "SingularityError",
    "FParams",
    "SpdMatrix",
    "f_cdf",
    "f_sf",
    "ln_gamma",
    "reg_inc_beta",
    "DirectionalResult",
    "LineDensity",
    "LinearFactors",
    "QuadraticPower",
    "directional_pvalue",
    "integrate_line_density",
    "linear_factors_density",
    "quadratic_power_density",
    "CalibrationReport",
    "SimConfig",
    "ks_statistic",
    "run_calibration",
    "__version__",
]

"""Generic test orchestration over exponential-family models.

Each model supplies (through a small adapter) its constrained/unconstrained
fits, a ray density builder, an exact closed-form p-value, and the Wald and
likelihood-ratio comparison statistics.  This module owns the pieces that
are model-independent: the centered line s(t) = (1 - t) s_psi in the
sufficient-statistic space, dispatch between the quadrature engine and the
closed form, and the degenerate-hypothesis convention (data exactly at the
constrained expectation: p = 1, no direction exists).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Protocol, runtime_checkable

import numpy as np

from .exceptions import DomainError
from .quadrature import DirectionalResult, LineDensity, directional_pvalue

__all__ = [
    "CenteredLine",
    "ExpFamilyModel",
    "TestDiagnostics",
    "TestOutcome",
    "ComparisonStatistics",
    "build_centered_line",
    "directional_test",
    "comparison_statistics",
    "get_model",
    "MODELS",
]

METHODS = ("quadrature", "closed_form", "both")


@dataclass(frozen=True)
class CenteredLine:
    """The ray s(t) = (1 - t) s_psi: t = 0 is the constrained expectation,
    t = 1 the observed point (which is the origin after centering)."""

    s_psi: np.ndarray
    d: int
    degenerate: bool

    def at(self, t: float) -> np.ndarray:
        return (1.0 - t) * self.s_psi


def build_centered_line(u_psi, u_obs, d: int) -> CenteredLine:
    """Center the sufficient statistic at the observed value: s_psi = u_psi - u_obs."""
    u_psi = np.asarray(u_psi, dtype=float)
    u_obs = np.asarray(u_obs, dtype=float)
    if u_psi.shape != u_obs.shape or u_psi.ndim != 1:
        raise DomainError(
            f"u_psi and u_obs must be vectors of equal length, got {u_psi.shape} vs {u_obs.shape}"
        )
    if d < 1:
        raise DomainError(f"interest dimension must be >= 1, got {d}")
    if u_psi.size == 0:
        raise DomainError("sufficient-statistic vectors must be nonempty")
    s = u_psi - u_obs
    size = max(float(np.max(np.abs(u_psi))), float(np.max(np.abs(u_obs))))
    degenerate = float(np.max(np.abs(s))) <= 1e-13 * size if size > 0 else True
    return CenteredLine(s_psi=s, d=d, degenerate=degenerate)


@runtime_checkable
class ExpFamilyModel(Protocol):
    """Capabilities every model adapter provides."""

    name: str

    def fit(self, data: Any, hypothesis: Any) -> Any: ...

    def degenerate(self, fit_: Any) -> bool: ...

    def line_density(self, fit_: Any) -> LineDensity: ...

    def closed_form_pvalue(self, fit_: Any) -> float: ...

    def dim_interest(self, fit_: Any) -> int: ...

    def wald_statistic(self, fit_: Any) -> float: ...

    def lrt_statistic(self, fit_: Any) -> float: ...

    def f_statistic(self, fit_: Any) -> tuple[float, tuple[float, float]]: ...

    def fit_warnings(self, fit_: Any) -> list[str]: ...

    def fit_summary(self, fit_: Any) -> dict: ...


@dataclass(frozen=True)
class TestDiagnostics:
    degenerate: bool
    boundary: bool  # observed point at/beyond the support edge (t_max <= 1)
    quadrature_p: float | None
    closed_form_p: float | None
    discrepancy: float | None  # |quadrature - closed form|, set when method="both"
    warnings: tuple[str, ...]


@dataclass(frozen=True)
class TestOutcome:
    model: str
    result: DirectionalResult
    diagnostics: TestDiagnostics
    fit: Any


def directional_test(
    model: ExpFamilyModel, data: Any, hypothesis: Any, method: str = "both"
) -> TestOutcome:
    """Run the test and package the result with diagnostics.

    method "quadrature" integrates the ray density, "closed_form" evaluates
    the model's exact F-form, "both" does both and records their absolute
    discrepancy.  A degenerate hypothesis (observed data exactly at the
    constrained expectation) short-circuits to p = 1 with a flag.
    """
    if method not in METHODS:
        raise DomainError(f"method must be one of {METHODS}, got {method!r}")
    fit_ = model.fit(data, hypothesis)
    warnings = list(model.fit_warnings(fit_))
    if model.degenerate(fit_):
        warnings.append("degenerate hypothesis: observed data match it exactly; p = 1")
        result = DirectionalResult(
            p=1.0,
            numerator=1.0,
            denominator=1.0,
            t_max=math.inf,
            method=method,
            est_abs_error=0.0,
        )
        diag = TestDiagnostics(
            degenerate=True,
            boundary=False,
            quadrature_p=1.0 if method in ("quadrature", "both") else None,
            closed_form_p=1.0 if method in ("closed_form", "both") else None,
            discrepancy=0.0 if method == "both" else None,
            warnings=tuple(warnings),
        )
        return TestOutcome(model=model.name, result=result, diagnostics=diag, fit=fit_)

    density = model.line_density(fit_)
    boundary = density.t_max <= 1.0
    if boundary:
        warnings.append("t_max <= 1: observed point at the support boundary; p = 0")

    quad_p: float | None = None
    closed_p: float | None = None
    discrepancy: float | None = None
    if method in ("quadrature", "both"):
        quad = directional_pvalue(density)
        quad_p = quad.p
    if method in ("closed_form", "both"):
        closed_p = model.closed_form_pvalue(fit_)

    if method == "closed_form":
        result = DirectionalResult(
            p=closed_p,
            numerator=closed_p,
            denominator=1.0,
            t_max=density.t_max,
            method="closed_form",
            est_abs_error=0.0,
        )
    else:
        if method == "both":
            discrepancy = abs(quad.p - closed_p)
        result = DirectionalResult(
            p=quad.p,
            numerator=quad.numerator,
            denominator=quad.denominator,
            t_max=quad.t_max,
            method=method,
            est_abs_error=quad.est_abs_error,
        )
    diag = TestDiagnostics(
        degenerate=False,
        boundary=boundary,
        quadrature_p=quad_p,
        closed_form_p=closed_p,
        discrepancy=discrepancy,
        warnings=tuple(warnings),
    )
    return TestOutcome(model=model.name, result=result, diagnostics=diag, fit=fit_)


@dataclass(frozen=True)
class ComparisonStatistics:
    wald: float
    lrt: float
    df: int


def comparison_statistics(
    model: ExpFamilyModel, data: Any, hypothesis: Any
) -> ComparisonStatistics:
    """Wald and likelihood-ratio statistics with their chi-square df."""
    fit_ = model.fit(data, hypothesis)
    return ComparisonStatistics(
        wald=model.wald_statistic(fit_),
        lrt=model.lrt_statistic(fit_),
        df=model.dim_interest(fit_),
    )


from . import exp_rates, linreg, mvn_mean, norm_var  # noqa: E402  (registry imports)

MODELS: dict[str, ExpFamilyModel] = {
    exp_rates.MODEL.name: exp_rates.MODEL,
    norm_var.MODEL.name: norm_var.MODEL,
    linreg.MODEL.name: linreg.MODEL,
    mvn_mean.MODEL.name: mvn_mean.MODEL,
}


def get_model(name: str) -> ExpFamilyModel:
    try:
        return MODELS[name]
    except KeyError:
        raise DomainError(
            f"unknown model {name!r}; available: {', '.join(sorted(MODELS))}"
        ) from None

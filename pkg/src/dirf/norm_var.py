"""Two-group normal variance-ratio test: H: var1/var2 = psi, means unknown.

Works off the biased within-group variances v_i^2 = n_i^{-1} sum (y - ybar)^2
(group means are profiled out exactly).  The ray density is a product of two
linear factors with exponents (n_i - 3)/2, so n_i = 2 produces an integrable
inverse-square-root endpoint singularity.  The p-value reduces exactly to
tails of W = psi * s2^2 / s1^2 against F(n2 - 1, n1 - 1), split at the
threshold c = n2 (n1 - 1) / (n1 (n2 - 1)) rather than at 1: with unequal
group sizes the split point of the biased-variance ratio is not 1.  When
n1 = n2, c = 1 and the test is the usual two-sided F-test.

The constrained variance MLE used here,
sigma2_hat_2psi = (n1 v1^2 / psi + n2 v2^2) / (n1 + n2), is the stationary
point of the constrained profile log-likelihood; the test suite validates
it against a direct 1-D numerical maximization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import DegeneracyError, DomainError
from .numerics import FParams, f_cdf, f_sf
from .quadrature import LineDensity, linear_factors_density

DEGENERACY_RTOL = 1e-13


@dataclass(frozen=True)
class NormVarData:
    """Group sizes and biased variances v_i^2 (divide by n_i, not n_i - 1)."""

    n1: int
    n2: int
    v1sq: float
    v2sq: float

    def __post_init__(self):
        for name, n in (("n1", self.n1), ("n2", self.n2)):
            if not (isinstance(n, (int, np.integer)) and n >= 2):
                raise DomainError(f"{name} must be an integer >= 2, got {n!r}")
        for name, v in (("v1sq", self.v1sq), ("v2sq", self.v2sq)):
            if not (v > 0 and math.isfinite(v)):
                raise DomainError(f"{name} must be positive and finite, got {v!r}")

    @staticmethod
    def from_samples(y1, y2) -> "NormVarData":
        # Two-pass variance: subtract the mean first, then square; avoids
        # the catastrophic cancellation of the sum-of-squares shortcut.
        y1 = np.asarray(y1, dtype=float)
        y2 = np.asarray(y2, dtype=float)
        for name, y in (("group 1", y1), ("group 2", y2)):
            if y.size < 2:
                raise DomainError(f"{name} needs at least 2 observations")
            if not np.all(np.isfinite(y)):
                raise DomainError(f"{name} must contain finite values")
        d1 = y1 - y1.mean()
        d2 = y2 - y2.mean()
        return NormVarData(
            int(y1.size), int(y2.size), float(d1 @ d1 / y1.size), float(d2 @ d2 / y2.size)
        )


@dataclass(frozen=True)
class NormVarFit:
    data: NormVarData
    psi: float
    sigma2_hat_psi: tuple[float, float]
    a1: float
    a2: float
    W: float
    threshold: float
    degenerate: bool


def fit(data: NormVarData, psi: float) -> NormVarFit:
    if not (psi > 0 and math.isfinite(psi)):
        raise DomainError(f"psi must be a positive finite ratio, got {psi!r}")
    n1, n2 = data.n1, data.n2
    v1, v2 = data.v1sq, data.v2sq
    s2_psi = (n1 * v1 / psi + n2 * v2) / (n1 + n2)
    s1_psi = psi * s2_psi
    a1 = (s1_psi - v1) / s1_psi
    a2 = (s2_psi - v2) / s2_psi
    w_stat = psi * (n2 * v2 / (n2 - 1)) / (n1 * v1 / (n1 - 1))
    threshold = n2 * (n1 - 1) / (n1 * (n2 - 1))
    degenerate = max(abs(a1), abs(a2)) <= DEGENERACY_RTOL
    return NormVarFit(
        data=data,
        psi=psi,
        sigma2_hat_psi=(s1_psi, s2_psi),
        a1=a1,
        a2=a2,
        W=w_stat,
        threshold=threshold,
        degenerate=degenerate,
    )


def s_psi(fit_: NormVarFit) -> np.ndarray:
    # Centered sufficient statistic in the (n1 v1^2, n2 v2^2) coordinates;
    # the mean components are identically zero and omitted.
    d = fit_.data
    return np.array(
        [
            d.n1 * (fit_.sigma2_hat_psi[0] - d.v1sq),
            d.n2 * (fit_.sigma2_hat_psi[1] - d.v2sq),
        ]
    )


def line_density(fit_: NormVarFit) -> LineDensity:
    """(1 - t a1)^((n1-3)/2) (1 - t a2)^((n2-3)/2), d = 1.

    Stored via the roots 1/a_i, so t_max = 1/max(a1, a2).
    """
    if fit_.degenerate:
        raise DegeneracyError("hypothesis sits at the MLE; the ray has zero length")
    n1, n2 = fit_.data.n1, fit_.data.n2
    return linear_factors_density(
        1,
        [(1.0 / fit_.a1, (n1 - 3) / 2.0), (1.0 / fit_.a2, (n2 - 3) / 2.0)],
    )


def f_params(data: NormVarData) -> FParams:
    return FParams(data.n2 - 1.0, data.n1 - 1.0)


def closed_form_pvalue(fit_: NormVarFit) -> float:
    params = f_params(fit_.data)
    if fit_.W >= fit_.threshold:
        return f_sf(fit_.W, params) / f_sf(fit_.threshold, params)
    return f_cdf(fit_.W, params) / f_cdf(fit_.threshold, params)


def loglik(sigma2: tuple[float, float], data: NormVarData) -> float:
    """Profile log-likelihood over the variances (means at their MLEs)."""
    s1, s2 = sigma2
    if not (s1 > 0 and s2 > 0):
        raise DomainError("variances must be positive")
    return (
        -0.5 * data.n1 * (math.log(s1) + data.v1sq / s1)
        - 0.5 * data.n2 * (math.log(s2) + data.v2sq / s2)
    )


def mle_from_suffstat(t1: float, t2: float, n1: int, n2: int) -> tuple[float, float]:
    """Variance MLEs from the deviance sums t_i = n_i v_i^2."""
    return (t1 / n1, t2 / n2)


def wald_statistic(fit_: NormVarFit) -> float:
    d = fit_.data
    psi_hat = d.v1sq / d.v2sq
    v1 = 2.0 * psi_hat * psi_hat * (1.0 / d.n1 + 1.0 / d.n2)
    diff = psi_hat - fit_.psi
    return diff * diff / v1


def lrt_statistic(fit_: NormVarFit) -> float:
    d = fit_.data
    return 2.0 * (loglik((d.v1sq, d.v2sq), d) - loglik(fit_.sigma2_hat_psi, d))


def f_statistic(fit_: NormVarFit) -> tuple[float, tuple[float, float]]:
    return fit_.W, (fit_.data.n2 - 1.0, fit_.data.n1 - 1.0)


class NormVarModel:
    """Adapter exposing the generic model interface."""

    name = "norm-var"
    interest_dim = 1

    def fit(self, data: NormVarData, hypothesis: float) -> NormVarFit:
        return fit(data, hypothesis)

    def degenerate(self, fit_: NormVarFit) -> bool:
        return fit_.degenerate

    def line_density(self, fit_: NormVarFit) -> LineDensity:
        return line_density(fit_)

    def closed_form_pvalue(self, fit_: NormVarFit) -> float:
        return closed_form_pvalue(fit_)

    def dim_interest(self, fit_: NormVarFit) -> int:
        return 1

    def wald_statistic(self, fit_: NormVarFit) -> float:
        return wald_statistic(fit_)

    def lrt_statistic(self, fit_: NormVarFit) -> float:
        return lrt_statistic(fit_)

    def f_statistic(self, fit_: NormVarFit) -> tuple[float, tuple[float, float]]:
        return f_statistic(fit_)

    def fit_warnings(self, fit_: NormVarFit) -> list[str]:
        return []

    def fit_summary(self, fit_: NormVarFit) -> dict:
        return {
            "variance_mle": [fit_.data.v1sq, fit_.data.v2sq],
            "variance_mle_constrained": list(fit_.sigma2_hat_psi),
            "a": [fit_.a1, fit_.a2],
            "W": fit_.W,
            "threshold": fit_.threshold,
            "psi": fit_.psi,
            "n": [fit_.data.n1, fit_.data.n2],
        }


MODEL = NormVarModel()

"""Two-group exponential rate-ratio test: H: rate1/rate2 = psi.

Data y_ij ~ Exponential(rate_i), i = 1, 2.  Sufficient statistics are the
group sums (u1, u2).  The density along the sufficient-statistic ray is a
product of two linear factors with exponents n_i - 1, and the p-value
reduces exactly to two-sided tail probabilities of W = psi * ybar1 / ybar2
against an F(2 n1, 2 n2) reference.  The canonical parameter is linear in
the nuisance rate, so no nuisance-information adjustment varies along the
ray (constant factors cancel in the p-value ratio).
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
class ExpRatesData:
    """Group sums u_i = sum_j y_ij and counts n_i."""

    u1: float
    u2: float
    n1: int
    n2: int

    def __post_init__(self):
        for name, n in (("n1", self.n1), ("n2", self.n2)):
            if not (isinstance(n, (int, np.integer)) and n >= 1):
                raise DomainError(f"{name} must be an integer >= 1, got {n!r}")
        for name, u in (("u1", self.u1), ("u2", self.u2)):
            if not (u > 0 and math.isfinite(u)):
                raise DomainError(f"{name} must be a positive finite sum, got {u!r}")

    @staticmethod
    def from_samples(y1, y2) -> "ExpRatesData":
        y1 = np.asarray(y1, dtype=float)
        y2 = np.asarray(y2, dtype=float)
        for name, y in (("group 1", y1), ("group 2", y2)):
            if y.size == 0:
                raise DomainError(f"{name} is empty")
            if not np.all(y > 0) or not np.all(np.isfinite(y)):
                raise DomainError(f"{name} must contain positive finite values")
        return ExpRatesData(float(y1.sum()), float(y2.sum()), int(y1.size), int(y2.size))


@dataclass(frozen=True)
class ExpRatesFit:
    data: ExpRatesData
    psi: float
    theta_hat: tuple[float, float]
    theta_hat_psi: tuple[float, float]
    u_psi: tuple[float, float]
    a1: float
    a2: float
    W: float
    degenerate: bool


def fit(data: ExpRatesData, psi: float) -> ExpRatesFit:
    """Unconstrained and constrained MLEs plus the ray coefficients.

    theta_hat = (n1/u1, n2/u2); under the constraint the rates share a
    common scale n/(psi*u1 + u2), and u_psi is the sufficient-statistic
    value whose unconstrained MLE equals the constrained one.
    """
    if not (psi > 0 and math.isfinite(psi)):
        raise DomainError(f"psi must be a positive finite ratio, got {psi!r}")
    u1, u2, n1, n2 = data.u1, data.u2, data.n1, data.n2
    n = n1 + n2
    theta_hat = (n1 / u1, n2 / u2)
    scale = psi * u1 + u2
    theta_hat_psi = (n * psi / scale, n / scale)
    u_psi = (n1 / theta_hat_psi[0], n2 / theta_hat_psi[1])
    s1 = u_psi[0] - u1
    s2 = u_psi[1] - u2
    size = max(u_psi[0], u_psi[1], u1, u2)
    degenerate = max(abs(s1), abs(s2)) <= DEGENERACY_RTOL * size
    if degenerate:
        a1 = a2 = math.inf
    else:
        a1 = u_psi[0] / s1
        a2 = u_psi[1] / s2
    w_stat = psi * (u1 / n1) / (u2 / n2)
    return ExpRatesFit(
        data=data,
        psi=psi,
        theta_hat=theta_hat,
        theta_hat_psi=theta_hat_psi,
        u_psi=u_psi,
        a1=a1,
        a2=a2,
        W=w_stat,
        degenerate=degenerate,
    )


def s_psi(fit_: ExpRatesFit) -> np.ndarray:
    return np.array([fit_.u_psi[0] - fit_.data.u1, fit_.u_psi[1] - fit_.data.u2])


def line_density(fit_: ExpRatesFit) -> LineDensity:
    """(1 - t/a1)^(n1-1) (1 - t/a2)^(n2-1) with d = 1."""
    if fit_.degenerate:
        raise DegeneracyError("hypothesis sits at the MLE; the ray has zero length")
    return linear_factors_density(
        1,
        [(fit_.a1, fit_.data.n1 - 1), (fit_.a2, fit_.data.n2 - 1)],
    )


def f_params(data: ExpRatesData) -> FParams:
    return FParams(2.0 * data.n1, 2.0 * data.n2)


def closed_form_pvalue(fit_: ExpRatesFit) -> float:
    """Two-sided exact form: tail of W = psi*ybar1/ybar2 beyond 1, renormalized."""
    params = f_params(fit_.data)
    if fit_.W >= 1.0:
        return f_sf(fit_.W, params) / f_sf(1.0, params)
    return f_cdf(fit_.W, params) / f_cdf(1.0, params)


def loglik(theta: tuple[float, float], data: ExpRatesData) -> float:
    t1, t2 = theta
    if not (t1 > 0 and t2 > 0):
        raise DomainError("rates must be positive")
    return (
        data.n1 * math.log(t1)
        - t1 * data.u1
        + data.n2 * math.log(t2)
        - t2 * data.u2
    )


def mle_from_suffstat(u1: float, u2: float, n1: int, n2: int) -> tuple[float, float]:
    """Unconstrained MLE as a function of the sufficient statistic alone."""
    return (n1 / u1, n2 / u2)


def wald_statistic(fit_: ExpRatesFit) -> float:
    # Delta-method variance of psi_hat from the inverse observed
    # information at the unconstrained MLE: psi_hat^2 (1/n1 + 1/n2).
    psi_hat = fit_.theta_hat[0] / fit_.theta_hat[1]
    v1 = psi_hat * psi_hat * (1.0 / fit_.data.n1 + 1.0 / fit_.data.n2)
    diff = psi_hat - fit_.psi
    return diff * diff / v1


def lrt_statistic(fit_: ExpRatesFit) -> float:
    return 2.0 * (loglik(fit_.theta_hat, fit_.data) - loglik(fit_.theta_hat_psi, fit_.data))


def f_statistic(fit_: ExpRatesFit) -> tuple[float, tuple[float, float]]:
    return fit_.W, (2.0 * fit_.data.n1, 2.0 * fit_.data.n2)


class ExpRatesModel:
    """Adapter exposing the generic model interface."""

    name = "exp-rates"
    interest_dim = 1

    def fit(self, data: ExpRatesData, hypothesis: float) -> ExpRatesFit:
        return fit(data, hypothesis)

    def degenerate(self, fit_: ExpRatesFit) -> bool:
        return fit_.degenerate

    def line_density(self, fit_: ExpRatesFit) -> LineDensity:
        return line_density(fit_)

    def closed_form_pvalue(self, fit_: ExpRatesFit) -> float:
        return closed_form_pvalue(fit_)

    def dim_interest(self, fit_: ExpRatesFit) -> int:
        return 1

    def wald_statistic(self, fit_: ExpRatesFit) -> float:
        return wald_statistic(fit_)

    def lrt_statistic(self, fit_: ExpRatesFit) -> float:
        return lrt_statistic(fit_)

    def f_statistic(self, fit_: ExpRatesFit) -> tuple[float, tuple[float, float]]:
        return f_statistic(fit_)

    def fit_warnings(self, fit_: ExpRatesFit) -> list[str]:
        return []

    def fit_summary(self, fit_: ExpRatesFit) -> dict:
        return {
            "rate_mle": list(fit_.theta_hat),
            "rate_mle_constrained": list(fit_.theta_hat_psi),
            "u_psi": list(fit_.u_psi),
            "a": [fit_.a1, fit_.a2],
            "W": fit_.W,
            "psi": fit_.psi,
            "n": [fit_.data.n1, fit_.data.n2],
        }


MODEL = ExpRatesModel()

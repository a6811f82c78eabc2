"""Multivariate normal mean test: H: mean = psi, covariance unknown.

With v = ybar - psi, A the scatter about psi and B the scatter about ybar
(both divided by n), the ray density is t^(p-1) (1 - C t^2)^((n-p-2)/2)
where C = v^T A^{-1} v < 1, supported on [0, C^{-1/2}].  The p-value equals
the Hotelling T^2 tail: 1 - G((n-p)/p * v^T B^{-1} v) with G the F(p, n-p)
CDF and T^2 = (n-1) v^T B^{-1} v.

n >= p + 1 observations are required so that B can be positive definite;
the minimal case n = p + 1 puts the exponent at -1/2 and exercises the
singular-endpoint quadrature path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import DegeneracyError, DomainError, SingularityError
from .numerics import FParams, SpdMatrix, f_sf, sherman_morrison_quad
from .quadrature import LineDensity, quadratic_power_density

DEGENERACY_RTOL = 1e-13


@dataclass(frozen=True)
class MvnData:
    """Sample matrix Y with n rows (observations) and p columns."""

    Y: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.Y, dtype=float)
        if y.ndim != 2:
            raise DomainError(f"Y must be a matrix of observations, got shape {y.shape}")
        n, p = y.shape
        if p < 1:
            raise DomainError("Y needs at least one column")
        if n < p + 1:
            raise DomainError(
                f"need n >= p + 1 observations for a nonsingular scatter, got n={n}, p={p}"
            )
        if not np.all(np.isfinite(y)):
            raise DomainError("Y must be finite")
        object.__setattr__(self, "Y", y)

    @property
    def n(self) -> int:
        return self.Y.shape[0]

    @property
    def p(self) -> int:
        return self.Y.shape[1]


@dataclass(frozen=True)
class MvnFit:
    data: MvnData
    psi: np.ndarray
    ybar: np.ndarray
    v: np.ndarray
    A: SpdMatrix
    B: SpdMatrix
    C: float
    quad_B: float  # v^T B^{-1} v, computed directly from B
    T2: float
    degenerate: bool


def fit(data: MvnData, psi) -> MvnFit:
    psi = np.atleast_1d(np.asarray(psi, dtype=float))
    if psi.shape != (data.p,):
        raise DomainError(f"psi must have length p={data.p}, got shape {psi.shape}")
    if not np.all(np.isfinite(psi)):
        raise DomainError("psi must be finite")
    y = data.Y
    n = data.n
    ybar = y.mean(axis=0)
    v = ybar - psi
    centered = y - ybar
    try:
        b_mat = SpdMatrix(centered.T @ centered / n)
    except SingularityError as exc:
        raise SingularityError(
            f"sample scatter is singular (data lie in a lower-dimensional affine subspace): {exc}"
        ) from exc
    shifted = y - psi
    a_mat = SpdMatrix(shifted.T @ shifted / n)
    c_val = a_mat.quad_form(v)
    quad_b = b_mat.quad_form(v)
    t2 = (n - 1) * quad_b
    return MvnFit(
        data=data,
        psi=psi,
        ybar=ybar,
        v=v,
        A=a_mat,
        B=b_mat,
        C=c_val,
        quad_B=quad_b,
        T2=t2,
        degenerate=c_val <= DEGENERACY_RTOL,
    )


def s_psi(fit_: MvnFit) -> np.ndarray:
    """Shift of u = (n ybar, vec(sum y y^T)) that moves the MLE to the constrained one.

    Refitting at u + s_psi yields mean psi and covariance equal to the
    psi-centered scatter A.  The scatter block here is the plain sum of
    outer products; pairing with the canonical concentration parameter
    would scale it by -1/2, which changes nothing along the ray.
    """
    n = fit_.data.n
    psi, ybar = fit_.psi, fit_.ybar
    first = n * (psi - ybar)
    cross = np.outer(psi, ybar)
    second = n * (2.0 * np.outer(psi, psi) - cross - cross.T)
    return np.concatenate([first, second.ravel()])


def line_density(fit_: MvnFit) -> LineDensity:
    """t^(p-1) (1 - C t^2)^((n-p-2)/2) on [0, C^{-1/2}].

    The likelihood-ratio factor contributes det-of-scatter^(n/2) and the
    information factor det^(-(p+2)/2); after the rank-one determinant
    identity the t-dependent part is (1 - C t^2) to the combined exponent,
    with all t-free determinants dropped (they cancel in the ratio).
    """
    if fit_.degenerate:
        raise DegeneracyError("hypothesis mean equals the sample mean; the ray has zero length")
    n, p = fit_.data.n, fit_.data.p
    return quadratic_power_density(p, 1.0, fit_.C, (n - p - 2) / 2.0)


def f_params(data: MvnData) -> FParams:
    return FParams(float(data.p), float(data.n - data.p))


def closed_form_pvalue(fit_: MvnFit) -> float:
    n, p = fit_.data.n, fit_.data.p
    return f_sf((n - p) / p * fit_.quad_B, f_params(fit_.data))


def loglik(mu, lam_entries, data: MvnData) -> float:
    """Log-likelihood at mean mu and concentration (inverse covariance) lam."""
    mu = np.asarray(mu, dtype=float)
    lam = SpdMatrix(lam_entries)
    diff = data.Y - mu
    quad = float(np.sum((diff @ lam.entries) * diff))
    return 0.5 * data.n * lam.logdet - 0.5 * quad


def mle_from_suffstat(u1: np.ndarray, u2_mat: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Unconstrained MLE (mean, covariance) from u = (n ybar, sum y y^T)."""
    mean = np.asarray(u1, dtype=float) / n
    cov = np.asarray(u2_mat, dtype=float) / n - np.outer(mean, mean)
    return mean, cov


def wald_statistic(fit_: MvnFit) -> float:
    # Covariance of ybar estimated by B / n from the inverse observed
    # information at the unconstrained MLE.
    return fit_.data.n * fit_.quad_B


def lrt_statistic(fit_: MvnFit) -> float:
    return fit_.data.n * math.log1p(fit_.quad_B)


def f_statistic(fit_: MvnFit) -> tuple[float, tuple[float, float]]:
    n, p = fit_.data.n, fit_.data.p
    return (n - p) / p * fit_.quad_B, (float(p), float(n - p))


def sherman_morrison_check(fit_: MvnFit) -> float:
    """v^T B^{-1} v recovered from C alone; equals quad_B up to round-off."""
    return sherman_morrison_quad(fit_.C)


class MvnMeanModel:
    """Adapter exposing the generic model interface."""

    name = "mvn-mean"

    def fit(self, data: MvnData, hypothesis) -> MvnFit:
        return fit(data, hypothesis)

    def degenerate(self, fit_: MvnFit) -> bool:
        return fit_.degenerate

    def line_density(self, fit_: MvnFit) -> LineDensity:
        return line_density(fit_)

    def closed_form_pvalue(self, fit_: MvnFit) -> float:
        return closed_form_pvalue(fit_)

    def dim_interest(self, fit_: MvnFit) -> int:
        return fit_.data.p

    def wald_statistic(self, fit_: MvnFit) -> float:
        return wald_statistic(fit_)

    def lrt_statistic(self, fit_: MvnFit) -> float:
        return lrt_statistic(fit_)

    def f_statistic(self, fit_: MvnFit) -> tuple[float, tuple[float, float]]:
        return f_statistic(fit_)

    def fit_warnings(self, fit_: MvnFit) -> list[str]:
        return []

    def fit_summary(self, fit_: MvnFit) -> dict:
        return {
            "mean": fit_.ybar.tolist(),
            "psi": fit_.psi.tolist(),
            "hotelling_t2": fit_.T2,
            "C": fit_.C,
            "n": fit_.data.n,
            "p": fit_.data.p,
        }


MODEL = MvnMeanModel()

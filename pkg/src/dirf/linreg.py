"""Gaussian linear regression with a linear constraint test: H: A beta = psi.

The d x p constraint matrix A must have full row rank; the interest
dimension is d.  Along the sufficient-statistic ray the profiled error
variance is the quadratic a - b t^2 with a = sigma2_hat under the
constraint and n*b the constraint quadratic form, giving the density
t^(d-1) (a - b t^2)^((n-p-2)/2) on [0, sqrt(a/b)].  The p-value reduces
exactly to the standard F-test of the constraint with (d, n - p) degrees
of freedom.

Normal equations are solved by Cholesky on X^T X (the object the formulas
consume anyway); a conditioning warning is recorded when the Gram diagonal
ratio exceeds 1e12.  Intercepts are ordinary columns of X.  A perfect fit
(zero residual variance) is an error: the ray density is undefined there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DegeneracyError, DomainError, PerfectFitError, SingularityError
from .numerics import FParams, SpdMatrix, f_sf
from .quadrature import LineDensity, quadratic_power_density

DEGENERACY_RTOL = 1e-13
CONDITION_DIAG_RATIO = 1e12


@dataclass(frozen=True)
class RegressionData:
    """Response vector y and full-column-rank design matrix X (n > p + 1)."""

    y: np.ndarray
    X: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        x = np.asarray(self.X, dtype=float)
        if y.ndim != 1:
            raise DomainError(f"y must be a vector, got shape {y.shape}")
        if x.ndim != 2:
            raise DomainError(f"X must be a matrix, got shape {x.shape}")
        if x.shape[0] != y.shape[0]:
            raise DomainError(f"X has {x.shape[0]} rows but y has {y.shape[0]} entries")
        if not (np.all(np.isfinite(y)) and np.all(np.isfinite(x))):
            raise DomainError("y and X must be finite")
        n, p = x.shape
        if n <= p + 1:
            raise DomainError(f"need n > p + 1 observations, got n={n}, p={p}")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "X", x)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]


@dataclass(frozen=True)
class LinearConstraint:
    """A beta = psi with A of shape (d, p), rank d <= p."""

    A: np.ndarray
    psi: np.ndarray

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.A, dtype=float))
        v = np.atleast_1d(np.asarray(self.psi, dtype=float))
        if a.ndim != 2 or v.ndim != 1 or a.shape[0] != v.shape[0]:
            raise DomainError(
                f"constraint shapes mismatch: A {a.shape} vs psi {v.shape}"
            )
        if a.shape[0] > a.shape[1]:
            raise DomainError(f"constraint rank d={a.shape[0]} exceeds p={a.shape[1]}")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(v))):
            raise DomainError("A and psi must be finite")
        object.__setattr__(self, "A", a)
        object.__setattr__(self, "psi", v)

    @property
    def d(self) -> int:
        return self.A.shape[0]


@dataclass(frozen=True)
class LinRegFit:
    data: RegressionData
    constraint: LinearConstraint
    beta_hat: np.ndarray
    beta_hat_psi: np.ndarray
    sigma2_hat: float
    sigma2_hat_psi: float
    sse: float
    a: float
    b: float
    F_stat: float
    degenerate: bool
    warnings: tuple[str, ...] = field(default=())


def fit(data: RegressionData, constraint: LinearConstraint) -> LinRegFit:
    y, x = data.y, data.X
    n, p = data.n, data.p
    if constraint.A.shape[1] != p:
        raise DomainError(
            f"constraint has {constraint.A.shape[1]} columns but the design has p={p}"
        )
    warnings = []
    gram_entries = x.T @ x
    diag = np.diagonal(gram_entries)
    if float(np.max(diag)) > CONDITION_DIAG_RATIO * float(np.min(diag)):
        warnings.append(
            "design is badly scaled: Gram diagonal ratio exceeds 1e12; "
            "consider rescaling the columns of X"
        )
    try:
        gram = SpdMatrix(gram_entries)
    except SingularityError as exc:
        raise SingularityError(f"design matrix is rank deficient: {exc}") from exc

    beta_hat = gram.solve(x.T @ y)
    resid = y - x @ beta_hat
    sse = float(resid @ resid)
    sigma2_hat = sse / n
    yty = float(y @ y)
    # an exact fit leaves round-off residuals of order eps*|y|, so SSE of
    # order eps^2 * y'y; 1e-24 separates that from any real noise
    if sse <= 1e-24 * max(yty, 1e-300):
        raise PerfectFitError(
            f"residual variance is zero to machine precision (SSE={sse:g}); "
            "the test is undefined for an exact fit"
        )

    a_mat = constraint.A
    gram_inv_at = np.column_stack([gram.solve(row) for row in a_mat])  # (X^T X)^{-1} A^T
    try:
        middle = SpdMatrix(a_mat @ gram_inv_at)  # A (X^T X)^{-1} A^T
    except SingularityError as exc:
        raise SingularityError(f"constraint matrix A is rank deficient: {exc}") from exc
    gap = a_mat @ beta_hat - constraint.psi
    beta_hat_psi = beta_hat - gram_inv_at @ middle.solve(gap)

    resid_psi = y - x @ beta_hat_psi
    sigma2_hat_psi = float(resid_psi @ resid_psi) / n
    xtr = x.T @ resid_psi
    b = float(xtr @ gram.solve(xtr)) / n
    a = sigma2_hat_psi
    d = constraint.d
    f_stat = (n * b / d) / (sse / (n - p))
    degenerate = b <= DEGENERACY_RTOL * a
    return LinRegFit(
        data=data,
        constraint=constraint,
        beta_hat=beta_hat,
        beta_hat_psi=beta_hat_psi,
        sigma2_hat=sigma2_hat,
        sigma2_hat_psi=sigma2_hat_psi,
        sse=sse,
        a=a,
        b=b,
        F_stat=f_stat,
        degenerate=degenerate,
        warnings=tuple(warnings),
    )


def s_psi(fit_: LinRegFit) -> np.ndarray:
    """Centered sufficient statistic shift in the (X^T y, y^T y) coordinates."""
    x, y = fit_.data.X, fit_.data.y
    bpsi = fit_.beta_hat_psi
    gram_bpsi = x.T @ (x @ bpsi)
    first = gram_bpsi - x.T @ y
    second = fit_.data.n * fit_.sigma2_hat_psi + float(bpsi @ gram_bpsi) - float(y @ y)
    return np.concatenate([first, [second]])


def line_density(fit_: LinRegFit) -> LineDensity:
    """t^(d-1) (a - b t^2)^((n-p-2)/2) on [0, sqrt(a/b)]."""
    if fit_.degenerate:
        raise DegeneracyError("constraint holds at the MLE; the ray has zero length")
    n, p = fit_.data.n, fit_.data.p
    return quadratic_power_density(
        fit_.constraint.d, fit_.a, fit_.b, (n - p - 2) / 2.0
    )


def f_params(fit_: LinRegFit) -> FParams:
    return FParams(float(fit_.constraint.d), float(fit_.data.n - fit_.data.p))


def closed_form_pvalue(fit_: LinRegFit) -> float:
    return f_sf(fit_.F_stat, f_params(fit_))


def loglik(beta: np.ndarray, sigma2: float, data: RegressionData) -> float:
    if not sigma2 > 0:
        raise DomainError("sigma2 must be positive")
    r = data.y - data.X @ np.asarray(beta, dtype=float)
    return -0.5 * data.n * math.log(sigma2) - 0.5 * float(r @ r) / sigma2


def mle_from_suffstat(u1: np.ndarray, u2: float, x: np.ndarray) -> tuple[np.ndarray, float]:
    """Unconstrained MLE (beta, sigma2) from u = (X^T y, y^T y) and the design."""
    gram = SpdMatrix(x.T @ x)
    beta = gram.solve(np.asarray(u1, dtype=float))
    sigma2 = (u2 - float(np.asarray(u1, dtype=float) @ beta)) / x.shape[0]
    return beta, sigma2


def wald_statistic(fit_: LinRegFit) -> float:
    # (A beta_hat - psi)^T {sigma2_hat A (X^T X)^{-1} A^T}^{-1} (...):
    # equals n*b / sigma2_hat via the constraint quadratic-form identity.
    return fit_.data.n * fit_.b / fit_.sigma2_hat


def lrt_statistic(fit_: LinRegFit) -> float:
    return fit_.data.n * (math.log(fit_.sigma2_hat_psi) - math.log(fit_.sigma2_hat))


def f_statistic(fit_: LinRegFit) -> tuple[float, tuple[float, float]]:
    return fit_.F_stat, (float(fit_.constraint.d), float(fit_.data.n - fit_.data.p))


class LinRegModel:
    """Adapter exposing the generic model interface."""

    name = "linreg"

    def fit(self, data: RegressionData, hypothesis: LinearConstraint) -> LinRegFit:
        return fit(data, hypothesis)

    def degenerate(self, fit_: LinRegFit) -> bool:
        return fit_.degenerate

    def line_density(self, fit_: LinRegFit) -> LineDensity:
        return line_density(fit_)

    def closed_form_pvalue(self, fit_: LinRegFit) -> float:
        return closed_form_pvalue(fit_)

    def dim_interest(self, fit_: LinRegFit) -> int:
        return fit_.constraint.d

    def wald_statistic(self, fit_: LinRegFit) -> float:
        return wald_statistic(fit_)

    def lrt_statistic(self, fit_: LinRegFit) -> float:
        return lrt_statistic(fit_)

    def f_statistic(self, fit_: LinRegFit) -> tuple[float, tuple[float, float]]:
        return f_statistic(fit_)

    def fit_warnings(self, fit_: LinRegFit) -> list[str]:
        return list(fit_.warnings)

    def fit_summary(self, fit_: LinRegFit) -> dict:
        return {
            "beta": fit_.beta_hat.tolist(),
            "beta_constrained": fit_.beta_hat_psi.tolist(),
            "sigma2": fit_.sigma2_hat,
            "sigma2_constrained": fit_.sigma2_hat_psi,
            "sse": fit_.sse,
            "a": fit_.a,
            "b": fit_.b,
            "F": fit_.F_stat,
            "n": fit_.data.n,
            "p": fit_.data.p,
            "d": fit_.constraint.d,
        }


MODEL = LinRegModel()

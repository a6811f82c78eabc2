"""Special functions and small dense SPD linear algebra.

Scalar routines (log-gamma, regularized incomplete beta, F and chi-square
distribution tails) back the closed-form p-values.  The symmetric
positive-definite helpers back the regression and multivariate fits.
Matrices are dense; problem sizes are small (p up to ~100), so there is no
sparse path.  Everything here is a pure function of its inputs and safe to
call concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import AccuracyError, DegeneracyError, DomainError, SingularityError

__all__ = [
    "FParams",
    "SpdMatrix",
    "ln_gamma",
    "reg_inc_beta",
    "f_cdf",
    "f_sf",
    "chi2_sf",
    "cholesky_spd",
    "spd_solve",
    "rank1_det_update",
    "sherman_morrison_quad",
]

_BETA_EPS = 1e-16
_FPMIN = 1e-300
_MAX_ITER = 500


def ln_gamma(x: float) -> float:
    """Natural log of the gamma function, x > 0."""
    if not (isinstance(x, (int, float)) and x > 0) or math.isnan(x):
        raise DomainError(f"ln_gamma requires x > 0, got {x!r}")
    return math.lgamma(x)


def _beta_cf(a: float, b: float, x: float) -> float:
    # Continued fraction for the incomplete beta function, evaluated with
    # the modified Lentz algorithm.  Converges fast for x < (a+1)/(a+b+2).
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _FPMIN:
        d = _FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _BETA_EPS:
            return h
    raise AccuracyError(
        f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})"
    )


def _inc_beta_xc(a: float, b: float, x: float, xc: float) -> float:
    # Regularized incomplete beta with the complement 1-x supplied
    # explicitly, so F-distribution tails never lose precision to
    # cancellation.  Switches branches at x = (a+1)/(a+b+2) so the
    # continued fraction always converges quickly.
    if x <= 0.0:
        return 0.0
    if xc <= 0.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log(xc)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_cf(a, b, x) / a
    return 1.0 - front * _beta_cf(b, a, xc) / b


def reg_inc_beta(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function I_x(a, b)."""
    if not (a > 0 and b > 0) or math.isnan(a) or math.isnan(b):
        raise DomainError(f"reg_inc_beta requires a, b > 0, got a={a!r}, b={b!r}")
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"reg_inc_beta requires 0 <= x <= 1, got {x!r}")
    return _inc_beta_xc(a, b, x, 1.0 - x)


@dataclass(frozen=True)
class FParams:
    """Degrees of freedom of an F distribution."""

    d1: float
    d2: float

    def __post_init__(self):
        if not (self.d1 > 0 and self.d2 > 0) or not (
            math.isfinite(self.d1) and math.isfinite(self.d2)
        ):
            raise DomainError(
                f"F degrees of freedom must be positive, got ({self.d1!r}, {self.d2!r})"
            )


def f_cdf(x: float, params: FParams) -> float:
    """CDF of the F(d1, d2) distribution, x >= 0."""
    if not x >= 0 or math.isnan(x):
        raise DomainError(f"f_cdf requires x >= 0, got {x!r}")
    if x == 0.0:
        return 0.0
    w = params.d1 * x
    return _inc_beta_xc(0.5 * params.d1, 0.5 * params.d2, w / (w + params.d2), params.d2 / (w + params.d2))


def f_sf(x: float, params: FParams) -> float:
    """Survival function 1 - CDF of F(d1, d2), accurate in the upper tail."""
    if not x >= 0 or math.isnan(x):
        raise DomainError(f"f_sf requires x >= 0, got {x!r}")
    if x == 0.0:
        return 1.0
    w = params.d1 * x
    return _inc_beta_xc(0.5 * params.d2, 0.5 * params.d1, params.d2 / (w + params.d2), w / (w + params.d2))


def _lower_gamma_series(s: float, x: float) -> float:
    # Regularized lower incomplete gamma P(s, x) by series, for x < s + 1.
    term = 1.0 / s
    total = term
    ap = s
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _BETA_EPS:
            return total * math.exp(-x + s * math.log(x) - math.lgamma(s))
    raise AccuracyError(f"incomplete gamma series did not converge (s={s}, x={x})")


def _upper_gamma_cf(s: float, x: float) -> float:
    # Regularized upper incomplete gamma Q(s, x) by continued fraction
    # (modified Lentz), for x >= s + 1.
    b = x + 1.0 - s
    c = 1.0 / _FPMIN
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER + 1):
        an = -i * (i - s)
        b += 2.0
        d = an * d + b
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = b + an / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _BETA_EPS:
            return h * math.exp(-x + s * math.log(x) - math.lgamma(s))
    raise AccuracyError(f"incomplete gamma continued fraction did not converge (s={s}, x={x})")


def chi2_sf(x: float, df: float) -> float:
    """Survival function of the chi-square distribution with df > 0."""
    if not df > 0:
        raise DomainError(f"chi2_sf requires df > 0, got {df!r}")
    if not x >= 0 or math.isnan(x):
        raise DomainError(f"chi2_sf requires x >= 0, got {x!r}")
    if x == 0.0:
        return 1.0
    s, half = 0.5 * df, 0.5 * x
    if half < s + 1.0:
        return 1.0 - _lower_gamma_series(s, half)
    return _upper_gamma_cf(s, half)


def cholesky_spd(m: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor of a symmetric positive-definite matrix.

    No pivoting; a pivot at or below dim * 1e-14 * max(diagonal) raises
    SingularityError rather than silently regularizing (a nudged factor
    would corrupt downstream support bounds).
    """
    a = np.asarray(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {a.shape}")
    n = a.shape[0]
    floor = n * 1e-14 * max(float(np.max(np.diagonal(a))), 0.0)
    lower = np.zeros_like(a)
    for j in range(n):
        pivot = a[j, j] - lower[j, :j] @ lower[j, :j]
        if not pivot > floor:
            raise SingularityError(
                f"matrix is not positive definite: pivot {pivot:g} at column {j} "
                f"(threshold {floor:g})"
            )
        lower[j, j] = math.sqrt(pivot)
        if j + 1 < n:
            lower[j + 1 :, j] = (a[j + 1 :, j] - lower[j + 1 :, :j] @ lower[j, :j]) / lower[j, j]
    return lower


def _solve_cholesky(lower: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    n = lower.shape[0]
    y = np.zeros(n)
    for i in range(n):
        y[i] = (rhs[i] - lower[i, :i] @ y[:i]) / lower[i, i]
    z = np.zeros(n)
    for i in range(n - 1, -1, -1):
        z[i] = (y[i] - lower[i + 1 :, i] @ z[i + 1 :]) / lower[i, i]
    return z


def spd_solve(m: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve m @ z = rhs for symmetric positive-definite m."""
    a = np.asarray(m, dtype=float)
    b = np.asarray(rhs, dtype=float)
    if b.ndim != 1 or b.shape[0] != a.shape[0]:
        raise DomainError(
            f"rhs length {b.shape} does not match matrix dimension {a.shape[0]}"
        )
    return _solve_cholesky(cholesky_spd(a), b)


class SpdMatrix:
    """A validated symmetric positive-definite matrix with a cached factor.

    Construction checks symmetry to 1e-12 relative and factors the matrix
    once; solves, quadratic forms and determinants reuse the factor.
    """

    __slots__ = ("entries", "dim", "_chol")

    def __init__(self, entries: np.ndarray):
        a = np.array(entries, dtype=float, copy=True)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DomainError(f"expected a square matrix, got shape {a.shape}")
        scale = float(np.max(np.abs(a))) if a.size else 0.0
        asym = float(np.max(np.abs(a - a.T))) if a.size else 0.0
        if asym > 1e-12 * scale:
            raise DomainError(
                f"matrix is not symmetric: max asymmetry {asym:g} vs scale {scale:g}"
            )
        a = 0.5 * (a + a.T)
        self.entries = a
        self.dim = a.shape[0]
        self._chol = cholesky_spd(a)

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        b = np.asarray(rhs, dtype=float)
        if b.ndim != 1 or b.shape[0] != self.dim:
            raise DomainError(f"rhs length {b.shape} does not match dim {self.dim}")
        return _solve_cholesky(self._chol, b)

    def quad_form(self, v: np.ndarray) -> float:
        """v^T M^{-1} v."""
        v = np.asarray(v, dtype=float)
        return float(v @ self.solve(v))

    @property
    def logdet(self) -> float:
        return 2.0 * float(np.sum(np.log(np.diagonal(self._chol))))

    @property
    def det(self) -> float:
        return float(np.prod(np.diagonal(self._chol)) ** 2)


def rank1_det_update(det_a: float, quad: float, t: float) -> float:
    """det(A - t^2 v v^T) from det(A) and quad = v^T A^{-1} v.

    Rank-one downdate of the determinant; the inputs are assumed to satisfy
    det_a > 0 and quad >= 0.
    """
    return det_a * (1.0 - t * t * quad)


def sherman_morrison_quad(quad_a: float) -> float:
    """v^T B^{-1} v from quad_a = v^T A^{-1} v where A = B + v v^T."""
    if not 0.0 <= quad_a:
        raise DomainError(f"quadratic form must be nonnegative, got {quad_a!r}")
    if quad_a >= 1.0:
        raise DegeneracyError(
            f"v^T A^{{-1}} v = {quad_a!r} >= 1: the downdated matrix is singular"
        )
    return quad_a / (1.0 - quad_a)

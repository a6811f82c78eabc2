"""Monte Carlo calibration: sample under the null, test p-value uniformity.

Replicates are generated with a counter-based PRNG (numpy's Philox 4x64)
keyed injectively by (seed, replicate index, stream), so replicate i's
stream never depends on how many workers ran or in what order replicates
were produced: identical configurations give bit-identical reports.

Sampling transforms are fixed: exponentials via -log(U)/rate, Gaussians by
inverting the normal CDF with the Wichura rational approximation (relative
error ~1e-15), multivariate normals through the Cholesky factor of the
covariance.

The calibration report carries, per requested method, the sorted p-values,
the Kolmogorov-Smirnov statistic against the uniform CDF, and empirical
rejection rates at the 1%, 5% and 10% levels.  The naive one-tailed F
method is included for the two-group scale models precisely because it is
mis-calibrated: its p-values cannot exceed the tail mass at the split
point, and the report makes that visible.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Any, Mapping

import numpy as np

from .core import get_model
from .exceptions import DomainError
from .exp_rates import ExpRatesData
from .linreg import LinearConstraint, RegressionData
from .mvn_mean import MvnData
from .norm_var import NormVarData
from .numerics import chi2_sf, f_cdf, f_sf
from .quadrature import directional_pvalue

__all__ = [
    "METHODS",
    "SimConfig",
    "MethodCalibration",
    "CalibrationReport",
    "replicate_rng",
    "norm_ppf",
    "sample_under_null",
    "ks_statistic",
    "run_calibration",
    "random_instance",
    "cross_validate",
    "default_params",
]

METHODS = (
    "directional_quadrature",
    "directional_closed",
    "wald",
    "lrt",
    "one_tailed_f",
)
_SCALE_MODELS = ("exp-rates", "norm-var")
ALPHAS = (0.01, 0.05, 0.10)

_MASK64 = (1 << 64) - 1
_MAX_REPLICATE = 1 << 48
_MAX_STREAM = 1 << 16


def replicate_rng(seed: int, replicate_index: int, stream: int = 0) -> np.random.Generator:
    """Independent generator for one replicate.

    The (seed, replicate, stream) triple is packed injectively into the
    128-bit Philox key; distinct keys yield independent streams by
    construction, making replicates order- and thread-independent.
    """
    if not 0 <= replicate_index < _MAX_REPLICATE:
        raise DomainError(f"replicate index out of range: {replicate_index!r}")
    if not 0 <= stream < _MAX_STREAM:
        raise DomainError(f"stream out of range: {stream!r}")
    key = np.array(
        [seed & _MASK64, (stream << 48) | replicate_index], dtype=np.uint64
    )
    return np.random.Generator(np.random.Philox(key=key))


# Wichura's rational approximation to the inverse standard normal CDF
# (algorithm AS 241, PPND16): three regimes, relative error ~1e-15.
_PPND_A = np.array([
    3.3871328727963666080e0, 1.3314166789178437745e2, 1.9715909503065514427e3,
    1.3731693765509461125e4, 4.5921953931549871457e4, 6.7265770927008700853e4,
    3.3430575583588128105e4, 2.5090809287301226727e3,
])
_PPND_B = np.array([
    1.0, 4.2313330701600911252e1, 6.8718700749205790830e2,
    5.3941960214247511077e3, 2.1213794301586595867e4, 3.9307895800092710610e4,
    2.8729085735721942674e4, 5.2264952788528545610e3,
])
_PPND_C = np.array([
    1.42343711074968357734e0, 4.63033784615654529590e0, 5.76949722146069140550e0,
    3.64784832476320460504e0, 1.27045825245236838258e0, 2.41780725177450611770e-1,
    2.27238449892691845833e-2, 7.74545014278341407640e-4,
])
_PPND_D = np.array([
    1.0, 2.05319162663775882187e0, 1.67638483018380384940e0,
    6.89767334985100004550e-1, 1.48103976427480074590e-1, 1.51986665636164571966e-2,
    5.47593808499534494600e-4, 1.05075007164441684324e-9,
])
_PPND_E = np.array([
    6.65790464350110377720e0, 5.46378491116411436990e0, 1.78482653991729133580e0,
    2.96560571828504891230e-1, 2.65321895265761230930e-2, 1.24266094738807843860e-3,
    2.71155556874348757815e-5, 2.01033439929228813265e-7,
])
_PPND_F = np.array([
    1.0, 5.99832206555887937690e-1, 1.36929880922735805310e-1,
    1.48753612908506148525e-2, 7.86869131145613259100e-4, 1.84631831751005468180e-5,
    1.42151175831644588870e-7, 2.04426310338993978564e-15,
])


def _poly(coeffs: np.ndarray, r: np.ndarray) -> np.ndarray:
    acc = np.full_like(r, coeffs[-1])
    for c in coeffs[-2::-1]:
        acc = acc * r + c
    return acc


def norm_ppf(p: np.ndarray) -> np.ndarray:
    """Inverse standard normal CDF for p in (0, 1)."""
    p = np.asarray(p, dtype=float)
    q = p - 0.5
    out = np.empty_like(p)
    central = np.abs(q) <= 0.425
    if np.any(central):
        r = 0.180625 - q[central] * q[central]
        out[central] = q[central] * _poly(_PPND_A, r) / _poly(_PPND_B, r)
    rest = ~central
    if np.any(rest):
        pr = np.minimum(p[rest], 1.0 - p[rest])
        r = np.sqrt(-np.log(pr))
        mid = r <= 5.0
        vals = np.empty_like(r)
        vals[mid] = _poly(_PPND_C, r[mid] - 1.6) / _poly(_PPND_D, r[mid] - 1.6)
        vals[~mid] = _poly(_PPND_E, r[~mid] - 5.0) / _poly(_PPND_F, r[~mid] - 5.0)
        out[rest] = np.where(q[rest] < 0.0, -vals, vals)
    return out


def _uniform_open(rng: np.random.Generator, size) -> np.ndarray:
    # (0, 1]: 1 - random() maps [0, 1) away from zero so logs stay finite.
    return 1.0 - rng.random(size)


def _std_normal(rng: np.random.Generator, size) -> np.ndarray:
    return norm_ppf(_uniform_open(rng, size))


def _exponential(rng: np.random.Generator, rate: float, size: int) -> np.ndarray:
    return -np.log(_uniform_open(rng, size)) / rate


def default_params(model: str) -> tuple[Mapping[str, Any], Any]:
    """Null-true generating parameters and hypothesis used by the CLI."""
    if model == "exp-rates":
        return {"theta": [1.0, 1.0], "n": [5, 5]}, 1.0
    if model == "norm-var":
        return {"sigma2": [1.0, 1.0], "n": [5, 7], "mu": [0.0, 0.0]}, 1.0
    if model == "linreg":
        n, p = 20, 2
        x = np.column_stack([np.ones(n), np.linspace(-1.0, 1.0, n)])
        return (
            {"X": x.tolist(), "beta": [0.0, 0.0], "sigma": 1.0},
            {"A": [[0.0, 1.0]], "psi": [0.0]},
        )
    if model == "mvn-mean":
        return {"mean": [0.0, 0.0], "cov": [[1.0, 0.0], [0.0, 1.0]], "n": 10}, [0.0, 0.0]
    raise DomainError(f"unknown model {model!r}")


def _check_null(model: str, params: Mapping[str, Any], hypothesis) -> None:
    rtol = 1e-12
    if model == "exp-rates":
        t1, t2 = (float(v) for v in params["theta"])
        if abs(t1 - float(hypothesis) * t2) > rtol * abs(t1):
            raise DomainError("generating rates do not satisfy the hypothesis ratio")
    elif model == "norm-var":
        s1, s2 = (float(v) for v in params["sigma2"])
        if abs(s1 - float(hypothesis) * s2) > rtol * abs(s1):
            raise DomainError("generating variances do not satisfy the hypothesis ratio")
    elif model == "linreg":
        a = np.asarray(hypothesis["A"], dtype=float)
        psi = np.atleast_1d(np.asarray(hypothesis["psi"], dtype=float))
        beta = np.asarray(params["beta"], dtype=float)
        gap = np.max(np.abs(a @ beta - psi))
        if gap > rtol * (1.0 + np.max(np.abs(psi))):
            raise DomainError("generating coefficients do not satisfy A beta = psi")
    elif model == "mvn-mean":
        mean = np.asarray(params["mean"], dtype=float)
        psi = np.atleast_1d(np.asarray(hypothesis, dtype=float))
        if mean.shape != psi.shape or np.max(np.abs(mean - psi)) > rtol * (
            1.0 + np.max(np.abs(psi))
        ):
            raise DomainError("generating mean does not equal the hypothesis mean")
    else:
        raise DomainError(f"unknown model {model!r}")


@dataclass(frozen=True)
class SimConfig:
    """A calibration run: model, null-true parameters, hypothesis, size, seed."""

    model: str
    params: Mapping[str, Any]
    hypothesis: Any
    r: int
    seed: int
    methods: tuple[str, ...] = ("directional_closed",)

    def __post_init__(self):
        if self.model not in ("exp-rates", "norm-var", "linreg", "mvn-mean"):
            raise DomainError(f"unknown model {self.model!r}")
        if not (isinstance(self.r, (int, np.integer)) and self.r >= 1):
            raise DomainError(f"replicate count must be >= 1, got {self.r!r}")
        if not self.methods:
            raise DomainError("at least one method is required")
        for m in self.methods:
            if m not in METHODS:
                raise DomainError(f"unknown method {m!r}; available: {METHODS}")
            if m == "one_tailed_f" and self.model not in _SCALE_MODELS:
                raise DomainError(
                    "one_tailed_f is defined only for the two-group scale models"
                )
        _check_null(self.model, self.params, self.hypothesis)
        object.__setattr__(self, "methods", tuple(self.methods))


def sample_under_null(config: SimConfig, replicate_index: int):
    """Draw one dataset at the null-true parameters; deterministic in
    (seed, replicate_index) regardless of call order."""
    rng = replicate_rng(config.seed, replicate_index)
    params = config.params
    if config.model == "exp-rates":
        t1, t2 = (float(v) for v in params["theta"])
        n1, n2 = (int(v) for v in params["n"])
        return ExpRatesData.from_samples(
            _exponential(rng, t1, n1), _exponential(rng, t2, n2)
        )
    if config.model == "norm-var":
        s1, s2 = (float(v) for v in params["sigma2"])
        m1, m2 = (float(v) for v in params.get("mu", (0.0, 0.0)))
        n1, n2 = (int(v) for v in params["n"])
        y1 = m1 + math.sqrt(s1) * _std_normal(rng, n1)
        y2 = m2 + math.sqrt(s2) * _std_normal(rng, n2)
        return NormVarData.from_samples(y1, y2)
    if config.model == "linreg":
        x = np.asarray(params["X"], dtype=float)
        beta = np.asarray(params["beta"], dtype=float)
        sigma = float(params["sigma"])
        y = x @ beta + sigma * _std_normal(rng, x.shape[0])
        return RegressionData(y, x)
    if config.model == "mvn-mean":
        mean = np.asarray(params["mean"], dtype=float)
        cov = np.asarray(params.get("cov", np.eye(mean.size)), dtype=float)
        n = int(params["n"])
        chol = np.linalg.cholesky(cov)
        z = _std_normal(rng, (n, mean.size))
        return MvnData(mean + z @ chol.T)
    raise DomainError(f"unknown model {config.model!r}")


def _parse_hypothesis(model: str, hypothesis):
    if model == "linreg":
        return LinearConstraint(
            np.asarray(hypothesis["A"], dtype=float),
            np.atleast_1d(np.asarray(hypothesis["psi"], dtype=float)),
        )
    if model == "mvn-mean":
        return np.atleast_1d(np.asarray(hypothesis, dtype=float))
    return float(hypothesis)


def one_tailed_f_pvalue(model_name: str, fit_) -> float:
    """The naive one-tailed F p-value: lower tail below the split point,
    upper tail above it, with no renormalization."""
    if model_name == "exp-rates":
        from .exp_rates import f_params

        params, threshold = f_params(fit_.data), 1.0
    elif model_name == "norm-var":
        from .norm_var import f_params

        params, threshold = f_params(fit_.data), fit_.threshold
    else:
        raise DomainError("one_tailed_f is defined only for the two-group scale models")
    w = fit_.W
    return f_cdf(w, params) if w < threshold else f_sf(w, params)


def _replicate_pvalues(config: SimConfig, index: int) -> tuple[dict[str, float], bool]:
    model = get_model(config.model)
    data = sample_under_null(config, index)
    hyp = _parse_hypothesis(config.model, config.hypothesis)
    fit_ = model.fit(data, hyp)
    degenerate = model.degenerate(fit_)
    out: dict[str, float] = {}
    density = None
    for method in config.methods:
        if degenerate:
            out[method] = 1.0
            continue
        if method == "directional_quadrature":
            if density is None:
                density = model.line_density(fit_)
            out[method] = directional_pvalue(density).p
        elif method == "directional_closed":
            out[method] = model.closed_form_pvalue(fit_)
        elif method == "wald":
            out[method] = chi2_sf(model.wald_statistic(fit_), model.dim_interest(fit_))
        elif method == "lrt":
            out[method] = chi2_sf(model.lrt_statistic(fit_), model.dim_interest(fit_))
        elif method == "one_tailed_f":
            out[method] = one_tailed_f_pvalue(config.model, fit_)
    return out, degenerate


def _chunk_worker(args: tuple[SimConfig, int, int]):
    config, lo, hi = args
    return [_replicate_pvalues(config, i) for i in range(lo, hi)]


def ks_statistic(pvalues: np.ndarray) -> float:
    """Two-sided Kolmogorov-Smirnov distance of sorted p-values from U(0,1)."""
    p = np.sort(np.asarray(pvalues, dtype=float))
    if p.size == 0:
        raise DomainError("ks_statistic requires at least one p-value")
    if p[0] < 0.0 or p[-1] > 1.0:
        raise DomainError("p-values must lie in [0, 1]")
    r = p.size
    i = np.arange(1, r + 1)
    return float(np.max(np.maximum(np.abs(i / r - p), np.abs((i - 1) / r - p))))


@dataclass(frozen=True)
class MethodCalibration:
    pvalues: tuple[float, ...]  # sorted ascending
    ks: float
    rejection_rates: dict[str, float]


@dataclass(frozen=True)
class CalibrationReport:
    model: str
    r: int
    seed: int
    methods: dict[str, MethodCalibration]
    degenerate_count: int

    def to_json_dict(self) -> dict:
        return {
            "schema_version": 1,
            "model": self.model,
            "replicates": self.r,
            "seed": self.seed,
            "degenerate_count": self.degenerate_count,
            "methods": {
                name: {
                    "ks": cal.ks,
                    "rejection_rates": dict(cal.rejection_rates),
                    "pvalues": list(cal.pvalues),
                }
                for name, cal in self.methods.items()
            },
        }


def run_calibration(config: SimConfig, workers: int = 1) -> CalibrationReport:
    """Compute every requested method's p-value per replicate and reduce.

    The reduction sorts before the KS statistic, so it is associative and
    order-independent; with any worker count the report is bit-identical.
    """
    workers = max(1, int(workers))
    rows: list[tuple[dict[str, float], bool]]
    if workers == 1 or config.r < 4 * workers:
        rows = [_replicate_pvalues(config, i) for i in range(config.r)]
    else:
        bounds = np.linspace(0, config.r, workers * 4 + 1).astype(int)
        chunks = [
            (config, int(lo), int(hi))
            for lo, hi in zip(bounds[:-1], bounds[1:])
            if hi > lo
        ]
        try:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                rows = [row for part in pool.map(_chunk_worker, chunks) for row in part]
        except (OSError, PermissionError):
            # Pool unavailable (restricted environment): same math, serial.
            rows = [_replicate_pvalues(config, i) for i in range(config.r)]
    degenerate_count = sum(1 for _, flag in rows if flag)
    methods: dict[str, MethodCalibration] = {}
    for name in config.methods:
        ps = np.sort(np.array([row[name] for row, _ in rows]))
        rates = {f"{a:.2f}": float(np.mean(ps <= a)) for a in ALPHAS}
        methods[name] = MethodCalibration(
            pvalues=tuple(float(v) for v in ps),
            ks=ks_statistic(ps),
            rejection_rates=rates,
        )
    return CalibrationReport(
        model=config.model,
        r=config.r,
        seed=config.seed,
        methods=methods,
        degenerate_count=degenerate_count,
    )


def random_instance(model: str, rng: np.random.Generator):
    """A randomized (data, hypothesis) pair for oracle cross-validation."""
    if model == "exp-rates":
        n1 = int(rng.integers(1, 51))
        n2 = int(rng.integers(1, 51))
        t1 = float(rng.uniform(0.2, 5.0))
        t2 = float(rng.uniform(0.2, 5.0))
        data = ExpRatesData.from_samples(
            _exponential(rng, t1, n1), _exponential(rng, t2, n2)
        )
        return data, float(np.exp(rng.uniform(-2.0, 2.0)))
    if model == "norm-var":
        n1 = int(rng.integers(2, 41))
        n2 = int(rng.integers(2, 41))
        s1 = float(rng.uniform(0.3, 3.0))
        s2 = float(rng.uniform(0.3, 3.0))
        y1 = rng.uniform(-2, 2) + math.sqrt(s1) * _std_normal(rng, n1)
        y2 = rng.uniform(-2, 2) + math.sqrt(s2) * _std_normal(rng, n2)
        return NormVarData.from_samples(y1, y2), float(np.exp(rng.uniform(-2.0, 2.0)))
    if model == "linreg":
        p = int(rng.integers(1, 9))
        n = int(rng.integers(p + 2, 61))
        d = int(rng.integers(1, p + 1))
        x = _std_normal(rng, (n, p))
        beta = _std_normal(rng, p)
        y = x @ beta + float(rng.uniform(0.5, 2.0)) * _std_normal(rng, n)
        a = _std_normal(rng, (d, p))
        psi = a @ beta + float(rng.uniform(0.0, 1.5)) * _std_normal(rng, d)
        return RegressionData(y, x), LinearConstraint(a, psi)
    if model == "mvn-mean":
        p = int(rng.integers(1, 7))
        n = int(rng.integers(p + 2, 51))
        root = _std_normal(rng, (p, p))
        cov = root @ root.T + 0.5 * np.eye(p)
        mean = _std_normal(rng, p)
        z = _std_normal(rng, (n, p))
        y = mean + z @ np.linalg.cholesky(cov).T
        psi = mean + float(rng.uniform(0.0, 1.0)) * _std_normal(rng, p)
        return MvnData(y), psi
    raise DomainError(f"unknown model {model!r}")


def cross_validate(models: list[str], cases: int, tol: float, seed: int) -> dict:
    """Compare quadrature against the closed form on random instances.

    The comparison is relative: |p_quad - p_closed| <= tol * p_closed
    (with a floor far below any attainable p-value).
    """
    if cases < 1:
        raise DomainError(f"cases must be >= 1, got {cases!r}")
    report: dict[str, Any] = {"schema_version": 1, "cases": cases, "tol": tol, "seed": seed}
    out_models: dict[str, Any] = {}
    overall = True
    for stream, name in enumerate(models):
        model = get_model(name)
        worst = 0.0
        degenerate = 0
        for case in range(cases):
            rng = replicate_rng(seed, case, stream=stream)
            data, hyp = random_instance(name, rng)
            fit_ = model.fit(data, hyp)
            if model.degenerate(fit_):
                degenerate += 1
                continue
            p_quad = directional_pvalue(model.line_density(fit_)).p
            p_closed = model.closed_form_pvalue(fit_)
            rel = abs(p_quad - p_closed) / max(p_closed, 1e-280)
            worst = max(worst, rel)
        ok = worst <= tol
        overall = overall and ok
        out_models[name] = {
            "max_rel_discrepancy": worst,
            "degenerate": degenerate,
            "pass": ok,
        }
    report["models"] = out_models
    report["pass"] = overall
    return report

import math

import numpy as np
import pytest
import scipy.special

from dirf import exp_rates
from dirf.exceptions import DomainError
from dirf.numerics import FParams, f_cdf, f_sf
from dirf.simulate import (
    SimConfig,
    cross_validate,
    ks_statistic,
    norm_ppf,
    replicate_rng,
    run_calibration,
    sample_under_null,
)


def exp_config(r=500, seed=7, methods=("directional_closed",)):
    return SimConfig(
        model="exp-rates",
        params={"theta": [1.0, 1.0], "n": [5, 5]},
        hypothesis=1.0,
        r=r,
        seed=seed,
        methods=methods,
    )


class TestRng:
    def test_norm_ppf_against_scipy(self):
        u = np.concatenate(
            [np.linspace(1e-12, 1 - 1e-12, 4001), [1e-300, 1e-30, 0.5, 1 - 1e-15]]
        )
        mine = norm_ppf(u)
        ref = scipy.special.ndtri(u)
        np.testing.assert_allclose(mine, ref, rtol=5e-15, atol=1e-14)

    def test_replicate_streams_differ(self):
        a = replicate_rng(1, 0).random(4)
        b = replicate_rng(1, 1).random(4)
        c = replicate_rng(2, 0).random(4)
        assert not np.allclose(a, b)
        assert not np.allclose(a, c)

    def test_replicate_rng_reproducible(self):
        a = replicate_rng(11, 3, stream=2).random(8)
        b = replicate_rng(11, 3, stream=2).random(8)
        np.testing.assert_array_equal(a, b)

    def test_index_bounds(self):
        with pytest.raises(DomainError):
            replicate_rng(1, -1)
        with pytest.raises(DomainError):
            replicate_rng(1, 0, stream=1 << 20)


class TestSampling:
    def test_exp_rates_draws(self):
        cfg = exp_config()
        d0 = sample_under_null(cfg, 0)
        assert d0.n1 == 5 and d0.n2 == 5
        assert d0.u1 > 0 and d0.u2 > 0
        again = sample_under_null(cfg, 0)
        assert (again.u1, again.u2) == (d0.u1, d0.u2)  # bit-identical

    def test_mvn_shape(self):
        cfg = SimConfig(
            model="mvn-mean",
            params={"mean": [0.0, 0.0], "cov": [[1.0, 0.0], [0.0, 1.0]], "n": 10},
            hypothesis=[0.0, 0.0],
            r=1,
            seed=3,
        )
        data = sample_under_null(cfg, 0)
        assert data.Y.shape == (10, 2)
        assert np.all(np.isfinite(data.Y))

    def test_linreg_fixed_design(self):
        n = 12
        x = np.column_stack([np.ones(n), np.linspace(0, 1, n)])
        cfg = SimConfig(
            model="linreg",
            params={"X": x.tolist(), "beta": [1.0, 2.0], "sigma": 1.0},
            hypothesis={"A": [[0.0, 1.0]], "psi": [2.0]},
            r=1,
            seed=5,
        )
        data = sample_under_null(cfg, 0)
        assert data.y.shape == (n,)
        np.testing.assert_array_equal(data.X, x)

    def test_null_violation_rejected(self):
        with pytest.raises(DomainError):
            SimConfig(
                model="exp-rates",
                params={"theta": [2.0, 1.0], "n": [5, 5]},
                hypothesis=1.0,
                r=10,
                seed=0,
            )
        with pytest.raises(DomainError):
            SimConfig(
                model="linreg",
                params={"X": [[1.0], [1.0], [1.0], [1.0]], "beta": [1.0], "sigma": 1.0},
                hypothesis={"A": [[1.0]], "psi": [0.0]},
                r=5,
                seed=0,
            )

    def test_one_tailed_restricted_to_scale_models(self):
        with pytest.raises(DomainError):
            SimConfig(
                model="mvn-mean",
                params={"mean": [0.0], "cov": [[1.0]], "n": 5},
                hypothesis=[0.0],
                r=5,
                seed=0,
                methods=("one_tailed_f",),
            )


class TestKsStatistic:
    def test_singleton(self):
        assert ks_statistic(np.array([0.5])) == 0.5

    def test_pair(self):
        assert ks_statistic(np.array([0.25, 0.75])) == 0.25

    def test_ideal_grid(self):
        r = 50
        grid = (np.arange(1, r + 1) - 0.5) / r
        assert ks_statistic(grid) == pytest.approx(0.5 / r, abs=1e-15)

    def test_empty_and_range_errors(self):
        with pytest.raises(DomainError):
            ks_statistic(np.array([]))
        with pytest.raises(DomainError):
            ks_statistic(np.array([-0.1, 0.5]))


class TestRunCalibration:
    def test_deterministic_across_workers(self):
        cfg = exp_config(r=120, methods=("directional_closed", "wald", "lrt"))
        serial = run_calibration(cfg, workers=1).to_json_dict()
        pooled = run_calibration(cfg, workers=4).to_json_dict()
        assert serial == pooled

    def test_single_replicate(self):
        report = run_calibration(exp_config(r=1))
        cal = report.methods["directional_closed"]
        assert len(cal.pvalues) == 1
        assert cal.ks >= 0.5

    def test_quadrature_and_closed_agree_per_replicate(self):
        cfg = exp_config(r=60, methods=("directional_quadrature", "directional_closed"))
        report = run_calibration(cfg)
        qs = report.methods["directional_quadrature"].pvalues
        cs = report.methods["directional_closed"].pvalues
        for q, c in zip(qs, cs):
            assert q == pytest.approx(c, rel=1e-8, abs=1e-12)

    def test_rejection_rates_near_nominal(self):
        r = 2000
        report = run_calibration(exp_config(r=r, seed=13))
        rates = report.methods["directional_closed"].rejection_rates
        for alpha_key, alpha in (("0.01", 0.01), ("0.05", 0.05), ("0.10", 0.10)):
            band = 3 * math.sqrt(alpha * (1 - alpha) / r)
            assert abs(rates[alpha_key] - alpha) <= band

    def test_one_tailed_bounded_and_worse(self):
        r = 2000
        cfg = exp_config(r=r, seed=29, methods=("directional_closed", "one_tailed_f"))
        report = run_calibration(cfg)
        params = FParams(10, 10)
        bound = max(f_cdf(1.0, params), f_sf(1.0, params))
        one = report.methods["one_tailed_f"]
        assert max(one.pvalues) <= bound + 1e-12
        assert one.ks > report.methods["directional_closed"].ks

    def test_conditional_branch_uniformity(self):
        # Within the W >= 1 branch the renormalized upper tail is itself
        # uniform; the split does not break calibration.
        r = 5000
        cfg = exp_config(r=r, seed=3)
        params = FParams(10, 10)
        upper = []
        for i in range(r):
            data = sample_under_null(cfg, i)
            fit = exp_rates.fit(data, 1.0)
            if fit.degenerate or fit.W < 1.0:
                continue
            upper.append(f_sf(fit.W, params) / f_sf(1.0, params))
        upper = np.sort(np.array(upper))
        assert upper.size > r / 3
        assert ks_statistic(upper) < 1.63 / math.sqrt(upper.size)

    def test_report_json_shape(self):
        report = run_calibration(exp_config(r=5)).to_json_dict()
        assert report["schema_version"] == 1
        assert report["replicates"] == 5
        assert "directional_closed" in report["methods"]
        method = report["methods"]["directional_closed"]
        assert set(method) == {"ks", "rejection_rates", "pvalues"}
        assert sorted(method["pvalues"]) == method["pvalues"]


class TestCrossValidate:
    def test_all_models_pass(self):
        report = cross_validate(
            ["exp-rates", "norm-var", "linreg", "mvn-mean"], cases=25, tol=1e-7, seed=17
        )
        assert report["pass"]
        for entry in report["models"].values():
            assert entry["max_rel_discrepancy"] <= 1e-7

    def test_impossible_tolerance_fails(self):
        report = cross_validate(["exp-rates"], cases=10, tol=1e-18, seed=17)
        assert not report["pass"]

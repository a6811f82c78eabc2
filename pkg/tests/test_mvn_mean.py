import math

import numpy as np
import pytest

from dirf import mvn_mean
from dirf.exceptions import DegeneracyError, DomainError, SingularityError
from dirf.numerics import rank1_det_update
from dirf.quadrature import directional_pvalue
from dirf.simulate import random_instance, replicate_rng


def worked_data():
    return mvn_mean.MvnData(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]))


class TestFit:
    def test_worked_instance(self):
        fit = mvn_mean.fit(worked_data(), [0.0, 0.0])
        np.testing.assert_allclose(fit.ybar, [1 / 3, 1 / 3], rtol=1e-15)
        np.testing.assert_allclose(fit.A.entries, np.eye(2) / 3, atol=1e-15)
        np.testing.assert_allclose(
            fit.B.entries, [[2 / 9, -1 / 9], [-1 / 9, 2 / 9]], atol=1e-15
        )
        assert fit.C == pytest.approx(2 / 3, rel=1e-13)
        assert fit.quad_B == pytest.approx(2.0, rel=1e-12)
        assert fit.T2 == pytest.approx(4.0, rel=1e-12)

    def test_degenerate_at_sample_mean(self):
        data = worked_data()
        fit = mvn_mean.fit(data, [1 / 3, 1 / 3])
        assert fit.degenerate
        assert fit.C == pytest.approx(0.0, abs=1e-15)
        assert fit.T2 == pytest.approx(0.0, abs=1e-15)
        with pytest.raises(DegeneracyError):
            mvn_mean.line_density(fit)

    def test_univariate_reduces_to_t_situation(self):
        y = np.array([[0.3], [1.1], [-0.4], [2.2]])
        psi = np.array([0.25])
        fit = mvn_mean.fit(mvn_mean.MvnData(y), psi)
        n = 4
        v1sq = float(np.mean((y[:, 0] - y[:, 0].mean()) ** 2))
        expected_t2 = (n - 1) * (y[:, 0].mean() - psi[0]) ** 2 / v1sq
        assert fit.T2 == pytest.approx(expected_t2, rel=1e-12)

    def test_singular_scatter(self):
        # all observations on a line: B is singular
        y = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [3.0, 3.0]])
        with pytest.raises(SingularityError):
            mvn_mean.fit(mvn_mean.MvnData(y), [0.0, 0.0])

    def test_shape_validation(self):
        with pytest.raises(DomainError):
            mvn_mean.MvnData(np.zeros((2, 2)))  # n < p + 1
        with pytest.raises(DomainError):
            mvn_mean.fit(worked_data(), [0.0, 0.0, 0.0])

    def test_scatter_split_identity(self):
        # A = B + v v^T
        for case in range(100):
            rng = replicate_rng(71, case)
            data, psi = random_instance("mvn-mean", rng)
            fit = mvn_mean.fit(data, psi)
            recon = fit.B.entries + np.outer(fit.v, fit.v)
            scale = np.abs(fit.A.entries).max()
            np.testing.assert_allclose(fit.A.entries, recon, atol=1e-12 * scale)

    def test_sherman_morrison_identity(self):
        # C/(1 - C) = v^T B^{-1} v
        for case in range(100):
            rng = replicate_rng(72, case)
            data, psi = random_instance("mvn-mean", rng)
            fit = mvn_mean.fit(data, psi)
            if fit.degenerate:
                continue
            assert mvn_mean.sherman_morrison_check(fit) == pytest.approx(
                fit.quad_B, rel=1e-10
            )


class TestLineDensity:
    def test_worked_instance(self):
        fit = mvn_mean.fit(worked_data(), [0.0, 0.0])
        dens = mvn_mean.line_density(fit)
        assert dens.d == 2
        assert dens.form.a == 1.0
        assert dens.form.b == pytest.approx(2 / 3, rel=1e-13)
        assert dens.form.e == -0.5  # n = p + 1: singular endpoint
        assert dens.t_max == pytest.approx(math.sqrt(1.5), rel=1e-13)

    def test_minimal_excess_observations(self):
        rng = replicate_rng(73, 0)
        p = 3
        y = rng.standard_normal((p + 2, p))
        fit = mvn_mean.fit(mvn_mean.MvnData(y), np.zeros(p))
        dens = mvn_mean.line_density(fit)
        assert dens.form.e == 0.0

    def test_determinant_lemma_matches_dense(self):
        for case in range(50):
            rng = replicate_rng(74, case)
            data, psi = random_instance("mvn-mean", rng)
            fit = mvn_mean.fit(data, psi)
            if fit.degenerate:
                continue
            t = float(rng.uniform(0.0, 0.97 / math.sqrt(fit.C)))
            dense = np.linalg.det(fit.A.entries - t * t * np.outer(fit.v, fit.v))
            ours = rank1_det_update(fit.A.det, fit.C, t)
            assert ours == pytest.approx(dense, rel=1e-10)

    def test_endpoint_behavior_is_integrable(self):
        # e = -1/2 diverges at t_max yet the integrals stay finite
        fit = mvn_mean.fit(worked_data(), [0.0, 0.0])
        res = directional_pvalue(mvn_mean.line_density(fit))
        assert math.isfinite(res.denominator)
        assert 0.0 <= res.p <= 1.0


class TestClosedForm:
    def test_worked_instance(self):
        fit = mvn_mean.fit(worked_data(), [0.0, 0.0])
        # argument (n-p)/p * vBv = 1; F(2,1) CDF at 1 is 1 - 3^{-1/2}
        assert mvn_mean.closed_form_pvalue(fit) == pytest.approx(3 ** -0.5, abs=1e-12)

    def test_p_one_at_sample_mean(self):
        fit = mvn_mean.fit(worked_data(), [1 / 3, 1 / 3])
        assert mvn_mean.closed_form_pvalue(fit) == pytest.approx(1.0, rel=1e-14)

    def test_two_point_scalar_case(self):
        # p=1, n=2, data {0, 2}, psi=0: argument 1, F(1,1) symmetric at 1
        fit = mvn_mean.fit(mvn_mean.MvnData(np.array([[0.0], [2.0]])), [0.0])
        assert fit.T2 == pytest.approx(1.0, rel=1e-14)
        assert mvn_mean.closed_form_pvalue(fit) == pytest.approx(0.5, abs=1e-12)

    def test_hotelling_scaling_consistency(self):
        for case in range(50):
            rng = replicate_rng(75, case)
            data, psi = random_instance("mvn-mean", rng)
            fit = mvn_mean.fit(data, psi)
            n, p = data.n, data.p
            stat, df = mvn_mean.f_statistic(fit)
            assert stat == pytest.approx((n - p) * fit.T2 / (p * (n - 1)), rel=1e-12)
            assert df == (p, n - p)


class TestEquivalence:
    def test_quadrature_matches_closed_form(self):
        for case in range(200):
            rng = replicate_rng(76, case)
            data, psi = random_instance("mvn-mean", rng)
            fit = mvn_mean.fit(data, psi)
            if fit.degenerate:
                continue
            p_quad = directional_pvalue(mvn_mean.line_density(fit)).p
            p_closed = mvn_mean.closed_form_pvalue(fit)
            assert p_quad == pytest.approx(p_closed, rel=1e-7, abs=1e-280)

    def test_affine_invariance(self):
        for case in range(30):
            rng = replicate_rng(77, case)
            data, psi = random_instance("mvn-mean", rng)
            fit = mvn_mean.fit(data, psi)
            if fit.degenerate:
                continue
            p = data.p
            m = replicate_rng(78, case).standard_normal((p, p)) + 2 * np.eye(p)
            shift = replicate_rng(79, case).standard_normal(p)
            data2 = mvn_mean.MvnData(data.Y @ m.T + shift)
            fit2 = mvn_mean.fit(data2, m @ np.asarray(psi) + shift)
            assert fit2.T2 == pytest.approx(fit.T2, rel=1e-8)
            assert mvn_mean.closed_form_pvalue(fit2) == pytest.approx(
                mvn_mean.closed_form_pvalue(fit), rel=1e-8
            )

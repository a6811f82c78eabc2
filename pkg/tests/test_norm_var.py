import math

import numpy as np
import pytest

from dirf import norm_var
from dirf.exceptions import DegeneracyError, DomainError
from dirf.numerics import FParams, f_cdf, f_sf
from dirf.quadrature import directional_pvalue
from dirf.simulate import replicate_rng


def random_case(rng, n_lo=2, n_hi=40):
    n1 = int(rng.integers(n_lo, n_hi + 1))
    n2 = int(rng.integers(n_lo, n_hi + 1))
    y1 = rng.normal(rng.uniform(-3, 3), math.sqrt(rng.uniform(0.3, 3.0)), n1)
    y2 = rng.normal(rng.uniform(-3, 3), math.sqrt(rng.uniform(0.3, 3.0)), n2)
    psi = float(np.exp(rng.uniform(-2, 2)))
    return norm_var.NormVarData.from_samples(y1, y2), psi


def t3_cdf(t):
    # Closed form for the Student t CDF with 3 degrees of freedom
    return 0.5 + (t / (math.sqrt(3.0) * (1 + t * t / 3)) + math.atan(t / math.sqrt(3.0))) / math.pi


class TestFit:
    def test_worked_instance(self):
        fit = norm_var.fit(norm_var.NormVarData(4, 2, 1.0, 1.0), 2.0)
        assert fit.sigma2_hat_psi == pytest.approx((4 / 3, 2 / 3), rel=1e-14)
        assert fit.a1 == pytest.approx(0.25, rel=1e-13)
        assert fit.a2 == pytest.approx(-0.5, rel=1e-13)
        assert fit.W == pytest.approx(3.0, rel=1e-14)
        assert fit.threshold == pytest.approx(1.5, rel=1e-15)
        assert not fit.degenerate

    def test_constrained_mle_against_grid_search(self):
        # The closed-form constrained variance must maximize the profile
        # log-likelihood over sigma2_2 (sigma2_1 = psi * sigma2_2).
        for case in range(20):
            rng = replicate_rng(51, case)
            data, psi = random_case(rng)
            fit = norm_var.fit(data, psi)
            center = fit.sigma2_hat_psi[1]
            grid = np.linspace(0.2 * center, 5 * center, 20001)
            values = [
                norm_var.loglik((psi * s2, s2), data) for s2 in grid
            ]
            best = grid[int(np.argmax(values))]
            assert best == pytest.approx(center, rel=2e-3)
            # and the closed form beats every grid point
            top = norm_var.loglik((psi * center, center), data)
            assert top >= max(values) - 1e-12

    def test_degenerate_at_variance_ratio(self):
        data = norm_var.NormVarData(5, 8, 2.0, 0.5)
        fit = norm_var.fit(data, data.v1sq / data.v2sq)
        assert fit.degenerate
        assert fit.a1 == pytest.approx(0.0, abs=1e-15)
        with pytest.raises(DegeneracyError):
            norm_var.line_density(fit)

    def test_degenerate_symmetric(self):
        fit = norm_var.fit(norm_var.NormVarData(2, 2, 1.0, 1.0), 1.0)
        assert fit.degenerate

    def test_bad_inputs(self):
        with pytest.raises(DomainError):
            norm_var.NormVarData(1, 2, 1.0, 1.0)
        with pytest.raises(DomainError):
            norm_var.NormVarData(2, 2, 0.0, 1.0)
        with pytest.raises(DomainError):
            norm_var.fit(norm_var.NormVarData(2, 2, 1.0, 1.0), 0.0)

    def test_opposite_signs(self):
        for case in range(50):
            rng = replicate_rng(52, case)
            data, psi = random_case(rng)
            fit = norm_var.fit(data, psi)
            if fit.degenerate:
                continue
            assert (fit.a1 > 0) != (fit.a2 > 0)

    def test_supplement_ratio_identity(self):
        # (1 - a2)/(1 - a1) = psi v2^2 / v1^2
        for case in range(100):
            rng = replicate_rng(53, case)
            data, psi = random_case(rng)
            fit = norm_var.fit(data, psi)
            lhs = (1 - fit.a2) / (1 - fit.a1)
            assert lhs == pytest.approx(psi * data.v2sq / data.v1sq, rel=1e-10)


class TestLineDensity:
    def test_worked_instance(self):
        fit = norm_var.fit(norm_var.NormVarData(4, 2, 1.0, 1.0), 2.0)
        dens = norm_var.line_density(fit)
        assert dens.d == 1
        roots = [a for a, _ in dens.form.factors]
        exps = [e for _, e in dens.form.factors]
        assert roots == pytest.approx([4.0, -2.0], rel=1e-13)
        assert exps == [0.5, -0.5]
        assert dens.t_max == pytest.approx(4.0, rel=1e-13)

    def test_n_three_constant(self):
        fit = norm_var.fit(norm_var.NormVarData(3, 3, 1.0, 2.0), 1.3)
        dens = norm_var.line_density(fit)
        assert [e for _, e in dens.form.factors] == [0.0, 0.0]

    def test_minimal_group_hits_singular_endpoint(self):
        # n_i = 2 on the positive side: exponent -1/2 at t_max, integrable
        data = norm_var.NormVarData(2, 9, 0.4, 1.1)
        fit = norm_var.fit(data, 3.0)
        dens = norm_var.line_density(fit)
        pairs = dict(zip((a for a, _ in dens.form.factors), (e for _, e in dens.form.factors)))
        pos_root = min(a for a in pairs if a > 0)
        if pairs[pos_root] == -0.5:
            res = directional_pvalue(dens)
            assert 0.0 <= res.p <= 1.0


class TestClosedForm:
    def test_worked_instance_against_t3_oracle(self):
        # F(1, 3) tails via the Student t(3) closed form
        fit = norm_var.fit(norm_var.NormVarData(4, 2, 1.0, 1.0), 2.0)
        sf3 = 2 * (1 - t3_cdf(math.sqrt(3.0)))
        sf15 = 2 * (1 - t3_cdf(math.sqrt(1.5)))
        expected = sf3 / sf15
        assert expected == pytest.approx(0.5897, abs=1e-4)
        assert norm_var.closed_form_pvalue(fit) == pytest.approx(expected, rel=1e-10)

    def test_w_at_threshold(self):
        # engineered so W == c exactly: psi * s2^2/s1^2 == c <=> v1^2 == psi v2^2
        data = norm_var.NormVarData(4, 6, 2.0, 1.0)
        fit = norm_var.fit(data, 2.0)
        assert fit.W == pytest.approx(fit.threshold, rel=1e-14)
        assert norm_var.closed_form_pvalue(fit) == pytest.approx(1.0, rel=1e-12)

    def test_equal_sizes_reduce_to_two_sided_f(self):
        data = norm_var.NormVarData(9, 9, 1.7, 0.9)
        fit = norm_var.fit(data, 1.4)
        assert fit.threshold == 1.0
        params = FParams(8, 8)
        if fit.W >= 1:
            expected = f_sf(fit.W, params) / f_sf(1.0, params)
        else:
            expected = f_cdf(fit.W, params) / f_cdf(1.0, params)
        assert norm_var.closed_form_pvalue(fit) == pytest.approx(expected, rel=1e-14)

    def test_branch_consistency(self):
        # W >= c exactly when v1^2 <= psi v2^2
        for case in range(200):
            rng = replicate_rng(54, case)
            data, psi = random_case(rng)
            fit = norm_var.fit(data, psi)
            assert (fit.W >= fit.threshold) == (data.v1sq <= psi * data.v2sq)


class TestEquivalence:
    def test_quadrature_matches_closed_form(self):
        # 1e-7 relative: the -1/2 endpoint exponent appears at n_i = 2
        for case in range(200):
            rng = replicate_rng(55, case)
            data, psi = random_case(rng)
            fit = norm_var.fit(data, psi)
            if fit.degenerate:
                continue
            p_quad = directional_pvalue(norm_var.line_density(fit)).p
            p_closed = norm_var.closed_form_pvalue(fit)
            assert p_quad == pytest.approx(p_closed, rel=1e-7, abs=1e-280)

    def test_location_invariance(self):
        rng = replicate_rng(56, 0)
        y1 = rng.normal(0.0, 1.3, 11)
        y2 = rng.normal(0.0, 0.7, 7)
        base = norm_var.fit(norm_var.NormVarData.from_samples(y1, y2), 1.8)
        shifted = norm_var.fit(
            norm_var.NormVarData.from_samples(y1 + 57.0, y2 - 3.25), 1.8
        )
        assert norm_var.closed_form_pvalue(base) == pytest.approx(
            norm_var.closed_form_pvalue(shifted), rel=1e-10
        )
        assert base.W == pytest.approx(shifted.W, rel=1e-10)

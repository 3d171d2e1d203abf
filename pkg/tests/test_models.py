import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from laserband import (InvalidParams, ModelParams, alpha_limit,
                       analytic_steady_state, build_operators, mean_excitation)


def params(family="p", p=4.0, dim=100, lam=0.0, q=0.0):
    return ModelParams(family=family, p=p, dim=dim, lam=lam, q=q)


class TestValidation:
    def test_rejects_bad_p(self):
        with pytest.raises(InvalidParams):
            params(p=0.0)
        with pytest.raises(InvalidParams):
            params(p=-1.0)

    def test_rejects_small_dim(self):
        with pytest.raises(InvalidParams):
            params(dim=2)

    def test_rejects_q_outside_range(self):
        with pytest.raises(InvalidParams):
            params(family="pq", q=0.5)
        with pytest.raises(InvalidParams):
            params(family="pq", q=-1.2)

    def test_q_boundary_accepted(self):
        # q = -1 maps to loss exponent parameter x = 1/2, a legal boundary
        pr = params(family="pq", q=-1.0)
        assert pr.x_loss == 0.5

    def test_regime_notes_flag_low_p_and_odd_lambda(self):
        assert any("p <= 3" in n for n in params(p=2.0).regime_notes())
        assert any("lambda" in n
                   for n in params(family="plambda", lam=1.5).regime_notes())
        assert params(p=4.1479, dim=300).regime_notes() == ()


class TestOperators:
    def test_flat_gain_for_p_family(self):
        ops = build_operators(params(p=4.0, dim=5))
        assert np.all(ops.gain == 1.0)

    def test_loss_matches_detailed_balance_ratio(self):
        # L_n = sqrt(rho_{n-1}/rho_n), element-wise against the analytic profile
        pr = params(p=3.3, dim=80)
        ops = build_operators(pr)
        rho = analytic_steady_state(pr)
        np.testing.assert_allclose(ops.loss, np.sqrt(rho[:-1] / rho[1:]),
                                   rtol=1e-13)

    def test_reciprocal_gain_loss_at_half_lambda(self):
        ops = build_operators(params(family="plambda", p=4.0, dim=300, lam=0.5))
        np.testing.assert_allclose(ops.gain * ops.loss, 1.0, atol=1e-14)

    def test_pq_at_zero_q_equals_p_family(self):
        a = build_operators(params(family="pq", p=3.7, dim=60, q=0.0))
        b = build_operators(params(family="p", p=3.7, dim=60))
        np.testing.assert_array_equal(a.gain, b.gain)
        np.testing.assert_array_equal(a.loss, b.loss)

    def test_quasi_isometry_of_flat_gain(self):
        # G^dag G = I - Pi_top holds exactly as a diagonal identity
        ops = build_operators(params(p=4.0, dim=40))
        gg = ops.gain_sq_diag()
        expected = np.ones(40)
        expected[-1] = 0.0
        np.testing.assert_array_equal(gg, expected)

    @given(p=st.floats(0.5, 8.0), lam=st.floats(0.0, 1.0),
           dim=st.integers(3, 120))
    @settings(max_examples=40, deadline=None)
    def test_detailed_balance_markovian(self, p, lam, dim):
        pr = params(family="plambda", p=p, dim=dim, lam=lam)
        ops = build_operators(pr)
        lhs = ops.gain**2 * ops.rho[:-1]
        rhs = ops.loss**2 * ops.rho[1:]
        assert np.abs(lhs - rhs).max() < 1e-14 * ops.rho.max()

    def test_flux_normalization_p_family(self):
        # F = sum rho_{n-1} telescopes to 1 - rho_{D-1} exactly
        pr = params(p=4.0, dim=70)
        ops = build_operators(pr)
        F = float(ops.loss_sq_diag() @ ops.rho)
        assert F == pytest.approx(1.0 - ops.rho[-1], abs=1e-15)


class TestSteadyState:
    def test_unit_sum_and_positive(self):
        rho = analytic_steady_state(params(p=2.5, dim=200))
        assert abs(rho.sum() - 1.0) < 1e-12
        assert np.all(rho > 0)

    def test_symmetric_about_midpoint(self):
        rho = analytic_steady_state(params(p=5.0, dim=151))
        np.testing.assert_allclose(rho, rho[::-1], rtol=1e-13)

    def test_alpha_limit_p4_is_8_over_3(self):
        # oracle: quadrature of sin^4 on a fine grid; lim D*alpha = pi / int
        x = np.linspace(0.0, np.pi, 2_000_001)
        integral = np.trapezoid(np.sin(x) ** 4, x)
        oracle = np.pi / integral
        assert oracle == pytest.approx(8.0 / 3.0, rel=1e-9)
        assert alpha_limit(4.0) == pytest.approx(8.0 / 3.0, rel=1e-12)

    def test_d_alpha_converges_at_d_1001(self):
        pr = params(p=4.0, dim=1001)
        ops = build_operators(pr)
        assert abs(pr.dim * ops.alpha - 8.0 / 3.0) < 0.01

    def test_edge_weight_scaling(self):
        for dim in (51, 101, 301):
            pr = params(p=4.0, dim=dim)
            rho = analytic_steady_state(pr)
            mid = (dim - 1) // 2
            assert rho[0] / rho[mid] < (np.pi / (dim + 1)) ** pr.p * 2.0


class TestMeanExcitation:
    def test_formula_values(self):
        assert mean_excitation(params(dim=1000)) == 499.5
        assert mean_excitation(params(dim=3)) == 1.0

    def test_weighted_sum_oracle(self):
        pr = params(p=3.0, dim=300)
        rho = analytic_steady_state(pr)
        assert abs(np.arange(300) @ rho - 149.5) < 1e-6

    @given(p=st.floats(0.6, 7.0), dim=st.integers(3, 400))
    @settings(max_examples=30, deadline=None)
    def test_mu_equals_weighted_sum(self, p, dim):
        pr = params(p=p, dim=dim)
        rho = analytic_steady_state(pr)
        assert abs(np.arange(dim) @ rho - pr.mu) < 1e-9 * dim

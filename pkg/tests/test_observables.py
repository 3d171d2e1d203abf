import numpy as np
import pytest
from scipy.integrate import quad

from laserband import (HorizonTooShort, ModelParams,
                       analytic_steady_state, build_operators,
                       compute_observables, liouvillian_for)
from laserband import observables as obs

OPT_P = 4.1479


def liou_for(family="p", p=OPT_P, dim=100, **kw):
    return liouvillian_for(ModelParams(family=family, p=p, dim=dim, **kw))


class TestSteadyState:
    def test_markovian_matches_analytic(self):
        for fam, kw in (("p", {}), ("plambda", {"lam": 0.5})):
            liou = liou_for(fam, dim=100, **kw)
            rho = obs.steady_state(liou)
            ana = analytic_steady_state(liou.params)
            assert np.abs(rho - ana).max() < 1e-10

    def test_plambda_shares_p_family_steady_state(self):
        a = obs.steady_state(liou_for("p", p=3.6, dim=80))
        b = obs.steady_state(liou_for("plambda", p=3.6, dim=80, lam=0.7))
        np.testing.assert_allclose(a, b, atol=1e-12)

    def test_pq_approaches_analytic_with_dimension(self):
        gaps = []
        for dim in (100, 300, 1000):
            liou = liou_for("pq", p=3.0, dim=dim, q=-1.0)
            rho = obs.steady_state(liou, check_unique=False)
            gaps.append(np.abs(rho - analytic_steady_state(liou.params)).max())
        assert gaps[0] > gaps[1] > gaps[2]
        # visually indistinguishable at D=1000: gap below 0.5% of the peak
        ana = analytic_steady_state(ModelParams(family="pq", p=3.0, dim=1000, q=-1.0))
        assert gaps[2] < 5e-3 * ana.max()


class TestFlux:
    def test_p_family_telescopes(self):
        liou = liou_for("p", p=4.0, dim=80)
        ana = analytic_steady_state(liou.params)
        assert obs.flux(liou, ana) == pytest.approx(1.0 - ana[-1], abs=1e-15)

    def test_near_unity_at_moderate_dim(self):
        liou = liou_for("plambda", p=4.15, dim=300, lam=0.5)
        assert abs(obs.flux(liou) - 1.0) < 1e-3

    def test_pq_at_zero_q_matches_p_family_exactly(self):
        a = obs.flux(liou_for("pq", p=3.5, dim=60, q=0.0))
        b = obs.flux(liou_for("p", p=3.5, dim=60))
        assert a == b


class TestCoherence:
    def test_positive_and_identity_with_linewidth(self):
        o = compute_observables(liou_for("p", dim=150))
        assert o.coherence > 0
        assert o.linewidth * o.coherence == pytest.approx(4.0 * o.flux, rel=1e-12)

    def test_two_route_consistency_with_g1_quadrature(self):
        # independent oracle: coherence = 2 * integral of unnormalised G1
        liou = liou_for("p", dim=120)
        o = compute_observables(liou)
        rho = liou.steady_state_vector()
        v = liou.ops.loss * rho[1:]
        w = liou.ops.loss
        prop = liou.propagator(1)
        val, _ = quad(lambda s: float(w @ prop.act(v, s)), 0.0,
                      60.0 / o.linewidth, limit=400)
        assert 2.0 * val == pytest.approx(o.coherence, rel=1e-3)

    def test_lambda_reflection_symmetry(self):
        c1 = obs.coherence(liou_for("plambda", dim=200, lam=0.3))
        c2 = obs.coherence(liou_for("plambda", dim=200, lam=0.7))
        assert c1 == pytest.approx(c2, rel=5e-3)

    def test_residual_reported_small(self):
        from laserband.observables import coherence_with_residual
        _, resid = coherence_with_residual(liou_for("plambda", dim=300, lam=0.5))
        assert resid < 1e-10


class TestMandelQ:
    def test_p_family_poissonian(self):
        for p in (2.0, 4.0, 6.0):
            q = obs.mandel_q(liou_for("p", p=p, dim=300))
            assert abs(q) < 1e-2

    def test_plambda_minimum(self):
        q = obs.mandel_q(liou_for("plambda", dim=300, lam=0.5))
        assert q == pytest.approx(-0.5, abs=0.01)

    def test_pq_tracks_pump_statistics(self):
        for qp in (-0.25, -0.5, -0.75, -1.0):
            q = obs.mandel_q(liou_for("pq", dim=300, q=qp))
            assert q == pytest.approx(qp, abs=0.02)

    def test_q_independent_of_p_for_plambda(self):
        qs = [obs.mandel_q(liou_for("plambda", p=p, dim=200, lam=0.3))
              for p in (2.0, 4.0, 6.0)]
        assert max(qs) - min(qs) < 0.01

    def test_gamma_extrapolation_hits_continuous_value(self):
        liou = liou_for("plambda", dim=60, lam=0.5)
        q_cont = obs.mandel_q(liou)
        q_ext = obs.mandel_q_gamma_extrapolated(liou, gammas=(1e-3, 5e-4))
        assert abs(q_ext - q_cont) < 1e-6


class TestGlauberTraces:
    def test_g1_normalised_at_zero(self):
        tr = obs.g1_trace(liou_for("p", dim=80), np.array([0.0, 1.0]))
        assert tr.values[0] == pytest.approx(1.0, abs=1e-9)

    def test_g1_monotone_decay_at_optimal_p(self):
        # dense-oracle confirmation at D=40, then the band route at D=300
        from scipy.linalg import expm
        from laserband.superop import dense_oracle, loss_matrix, unvec, vec
        from laserband.verify import _dense_steady_state
        params = ModelParams(family="p", p=4.15, dim=40)
        ops = build_operators(params)
        Ld = dense_oracle(ops, params)
        rho_d = _dense_steady_state(Ld, 40)
        Lm = loss_matrix(ops)
        o = compute_observables(liouvillian_for(params))
        step = expm(Ld * (5.0 / o.linewidth / 40.0))
        w = vec(Lm @ rho_d)
        dense_vals = []
        for _ in range(40):
            dense_vals.append(np.trace(unvec(w, 40) @ Lm.T))
            w = step @ w
        assert np.all(np.diff(dense_vals) < 0)

        liou = liou_for("p", p=4.15, dim=300)
        o = compute_observables(liou)
        ts = np.linspace(0.0, 10.0 / o.linewidth, 300)
        tr = obs.g1_trace(liou, ts)
        assert np.all(np.diff(tr.values) < 0)

    def test_g1_close_to_ideal_and_improving_with_dim(self):
        sups = []
        for dim in (100, 200, 300):
            liou = liou_for("p", p=4.15, dim=dim)
            o = compute_observables(liou)
            ts = np.linspace(0.0, 10.0 / o.linewidth, 200)
            tr = obs.g1_trace(liou, ts)
            sups.append(np.abs(tr.values - np.exp(-o.linewidth * ts / 2)).max())
        assert sups[0] < 0.05
        assert sups[0] > sups[1] > sups[2]

    def test_g1_rejects_negative_times(self):
        with pytest.raises(ValueError):
            obs.g1_trace(liou_for("p", dim=40), np.array([-1.0]))


class TestG2:
    def test_factorises_at_long_delay(self):
        liou = liou_for("plambda", dim=80, lam=0.5)
        o = compute_observables(liou)
        sigma = 50.0 * np.sqrt(o.coherence)
        assert obs.g2_general(liou, 0.0, sigma, sigma, 0.0) == pytest.approx(1.0, abs=1e-6)

    def test_time_translation_invariance(self):
        liou = liou_for("plambda", dim=60, lam=0.5)
        base = (0.0, 7.3, 11.0, 2.5)
        a = obs.g2_general(liou, *base)
        b = obs.g2_general(liou, *(t + 1234.5 for t in base))
        assert a == pytest.approx(b, rel=1e-10)

    def test_matches_dense_oracle_chain(self):
        from laserband.superop import dense_oracle, loss_matrix
        from laserband.verify import _dense_g2, _dense_steady_state
        params = ModelParams(family="pq", p=3.8, dim=12, q=-0.6)
        ops = build_operators(params)
        liou = liouvillian_for(params)
        Ld = dense_oracle(ops, params)
        rho_d = _dense_steady_state(Ld, 12)
        rng = np.random.default_rng(3)
        tup = tuple(rng.uniform(0.0, 30.0, size=4))
        a = obs.g2_general(liou, *tup)
        b = _dense_g2(Ld, rho_d, loss_matrix(ops), *tup)
        assert a == pytest.approx(b, abs=1e-10)

    def test_antibunching_dip_scales_as_inverse_sqrt_coherence(self):
        from laserband.verify import fit_power_law
        samples = []
        for dim in (50, 100, 150, 200, 250):
            liou = liou_for("plambda", dim=dim, lam=0.5)
            c = obs.coherence(liou)
            dip = 1.0 - obs.g2_general(liou, 0.0, 0.0, 0.0, 0.0)
            samples.append((c, dip))
        fit = fit_power_law(samples)
        assert fit.exponent == pytest.approx(-0.5, abs=0.05)

    def test_g2ps_trace_tends_to_one(self):
        liou = liou_for("plambda", dim=80, lam=0.5)
        o = compute_observables(liou)
        ts = np.array([0.0, 200.0 * np.sqrt(o.coherence)])
        tr = obs.g2_ps_trace(liou, ts)
        assert tr.values[-1] == pytest.approx(1.0, abs=1e-9)
        assert tr.values[0] < 1.0


class TestMandelQFromG2:
    def test_p_family_quadrature_near_zero(self):
        liou = liou_for("p", dim=200)
        o = compute_observables(liou)
        q = obs.mandel_q_from_g2(liou, horizon=400.0 * np.sqrt(o.coherence))
        assert abs(q) < 5e-3

    def test_matches_resolvent_within_one_percent(self):
        liou = liou_for("plambda", dim=200, lam=0.5)
        o = compute_observables(liou)
        q = obs.mandel_q_from_g2(liou, horizon=400.0 * np.sqrt(o.coherence))
        assert q == pytest.approx(o.mandel_q, rel=0.01)

    def test_degenerate_horizon_raises(self):
        liou = liou_for("p", dim=50)
        with pytest.raises(HorizonTooShort):
            obs.mandel_q_from_g2(liou, horizon=0.0)

    def test_undecayed_horizon_raises(self):
        liou = liou_for("plambda", dim=100, lam=0.5)
        with pytest.raises(HorizonTooShort):
            obs.mandel_q_from_g2(liou, horizon=1e-3)

import numpy as np
import pytest

from laserband import (DimensionTooLarge, GammaTooLarge, InconsistentInputs,
                       InvalidParams, ModelParams,
                       build_liouvillian, build_operators, build_transfer,
                       dense_oracle, liouvillian_for, pq_norm_diagnostics)
from laserband.superop import band_flat_indices, gain_matrix, loss_matrix, vec
from laserband.verify import loglog_slope


def make(family="p", p=4.0, dim=12, lam=0.0, q=0.0, max_band=2):
    params = ModelParams(family=family, p=p, dim=dim, lam=lam, q=q)
    return params, liouvillian_for(params, max_band=max_band)


ALL_FAMILIES = [("p", {}), ("plambda", {"lam": 0.3}), ("pq", {"q": -0.7})]


@pytest.mark.parametrize("family,kw", ALL_FAMILIES)
def test_trace_preservation_row_sum(family, kw):
    # the all-ones row annihilates band 0: column sums of the block vanish
    _, liou = make(family=family, dim=40, **kw)
    m0 = liou.block(0).to_dense()
    assert np.abs(m0.sum(axis=0)).max() < 1e-12


def test_band0_kernel_matches_dense_eigensolve():
    # dense eigen-solve oracle: eigenvector of the smallest |eigenvalue|
    params, liou = make(p=4.0, dim=8)
    m0 = liou.block(0).to_dense()
    lam, vecs = np.linalg.eig(m0)
    v = np.real(vecs[:, np.argmin(np.abs(lam))])
    v = v / v.sum()
    np.testing.assert_allclose(v, build_operators(params).rho, atol=1e-10)


@pytest.mark.parametrize("family,kw", ALL_FAMILIES)
def test_band_negative_equals_positive(family, kw):
    # band -k carries the same block as band +k: check against the dense
    # oracle acting on a matrix supported on band -2
    params, liou = make(family=family, dim=10, **kw)
    D = params.dim
    ops = build_operators(params)
    Ld = dense_oracle(ops, params)
    b = np.arange(1.0, D - 1)
    w = np.zeros((D, D))
    w[np.arange(2, D), np.arange(D - 2)] = b  # band -2, column-indexed
    out = (Ld @ vec(w)).reshape(D, D, order="F")
    got = out[np.arange(2, D), np.arange(D - 2)]
    np.testing.assert_allclose(got, liou.block(2).matvec(b), atol=1e-13)


@pytest.mark.parametrize("family,kw", ALL_FAMILIES)
def test_band_closure_no_leakage(family, kw):
    params, liou = make(family=family, dim=11, **kw)
    D = params.dim
    ops = build_operators(params)
    Ld = dense_oracle(ops, params)
    rng = np.random.default_rng(5)
    for k in (0, 1, 3):
        x = np.zeros(D * D)
        idx = band_flat_indices(D, k)
        x[idx] = rng.normal(size=idx.size)
        y = Ld @ x
        mask = np.ones(D * D, bool)
        mask[idx] = False
        assert np.abs(y[mask]).max() < 1e-14


@pytest.mark.parametrize("family,kw", ALL_FAMILIES)
def test_band0_spectrum_sane(family, kw):
    # all eigenvalues in the closed left half-plane; exactly one at zero
    _, liou = make(family=family, dim=40, **kw)
    lam = np.linalg.eigvals(liou.block(0).to_dense())
    assert lam.real.max() <= 1e-10
    assert np.sum(np.abs(lam) < 1e-10) == 1


def test_dense_band_permutation_match():
    # permuting dense rows/columns into band order reproduces the blocks
    params, liou = make(p=2.0, dim=4)
    ops = build_operators(params)
    Ld = dense_oracle(ops, params)
    for k in (0, 1, 2):
        idx = band_flat_indices(4, k)
        np.testing.assert_allclose(Ld[np.ix_(idx, idx)],
                                   liou.block(k).to_dense(), atol=1e-14)


def test_dense_gain_squared_is_square():
    from laserband.superop import dense_dissipator
    params = ModelParams(family="pq", p=3.0, dim=12, q=-0.5)
    ops = build_operators(params)
    dG = dense_dissipator(gain_matrix(ops))
    dL = dense_dissipator(loss_matrix(ops))
    full = dense_oracle(ops, params)
    np.testing.assert_allclose(full, dG + (params.q / 2) * (dG @ dG) + dL,
                               atol=1e-13)


def test_dense_steady_state_matches_band_solve():
    from laserband.verify import _dense_steady_state
    params, liou = make(family="plambda", p=4.0, dim=12, lam=0.3)
    ops = build_operators(params)
    Ld = dense_oracle(ops, params)
    rho_dense = np.diag(_dense_steady_state(Ld, 12))
    np.testing.assert_allclose(rho_dense, liou.steady_state_vector(), atol=1e-10)


def test_dense_oracle_guard():
    params = ModelParams(family="p", p=4.0, dim=65)
    with pytest.raises(DimensionTooLarge):
        dense_oracle(build_operators(params), params)


def test_inconsistent_inputs_rejected():
    a = build_operators(ModelParams(family="p", p=4.0, dim=10))
    b = ModelParams(family="p", p=4.0, dim=12)
    with pytest.raises(InconsistentInputs):
        build_liouvillian(a, b)


class TestTransfer:
    def test_gamma_zero_is_identity_kraus(self):
        ops = build_operators(ModelParams(family="p", p=4.0, dim=10))
        ts = build_transfer(ops, 0.0)
        assert np.all(ts.a_gain == 0) and np.all(ts.a_loss == 0)
        np.testing.assert_array_equal(ts.a_keep, np.ones(10))

    def test_isometry_defect_tiny(self):
        ops = build_operators(ModelParams(family="p", p=4.0, dim=10))
        assert build_transfer(ops, 1e-4).isometry_defect() < 1e-12

    def test_gamma_too_large(self):
        ops = build_operators(ModelParams(family="p", p=6.0, dim=10))
        with pytest.raises(GammaTooLarge):
            build_transfer(ops, 1e3)

    def test_band0_step_is_exactly_first_order(self):
        # on band 0 the no-jump diagonal is linear in gamma, so
        # (T0 - I)/gamma = L0 holds to round-off at any step
        params, liou = make(p=4.0, dim=40)
        ops = build_operators(params)
        t0 = build_transfer(ops, 1e-3).band_block(0).to_dense()
        assert np.abs((t0 - np.eye(40)) / 1e-3 - liou.block(0).to_dense()).max() < 1e-11

    def test_richardson_first_order_limit_band1(self):
        # on band 1 the sqrt no-jump amplitudes bring an O(gamma^2) term:
        # halving gamma halves the residual of (T1 - I)/gamma - L1
        params, liou = make(p=4.0, dim=40)
        ops = build_operators(params)
        m1 = liou.block(1).to_dense()
        resid = []
        for gamma in (1e-3, 5e-4):
            t1 = build_transfer(ops, gamma).band_block(1).to_dense()
            resid.append(np.linalg.norm((t1 - np.eye(39)) / gamma - m1))
        assert 0.4 < resid[1] / resid[0] < 0.6

    def test_b_matrices_recover_cavity_operators(self):
        ops = build_operators(ModelParams(family="plambda", p=4.0, dim=20, lam=0.4))
        gamma = 2.5e-4
        ts = build_transfer(ops, gamma)
        np.testing.assert_allclose(ts.a_gain / np.sqrt(gamma), ops.gain, rtol=1e-14)
        np.testing.assert_allclose(ts.a_loss / np.sqrt(gamma), ops.loss, rtol=1e-14)


class TestPQDiagnostics:
    def test_rejects_markovian_families(self):
        with pytest.raises(InvalidParams):
            pq_norm_diagnostics(ModelParams(family="p", p=3.0, dim=10), [10])

    def test_regular_pump_norm_scalings(self):
        params = ModelParams(family="pq", p=3.0, dim=100, q=-1.0)
        rows = pq_norm_diagnostics(params, [100, 200, 400])
        dims = [r.dim for r in rows]

        def exponent(attr):
            return loglog_slope(
                [(d, getattr(r, attr)) for d, r in zip(dims, rows)])

        # loss and gain-defect norms are O(1/D)
        assert abs(exponent("loss_norm") + 1.0) < 0.3
        assert abs(exponent("gain_defect_norm") + 1.0) < 0.3
        # the top-projector term decays strictly faster than the gain defect
        assert exponent("pi_top_norm") < exponent("gain_defect_norm")
        # generator residual at the analytic profile decays at least as D^-1.5
        assert exponent("generator_residual") <= -1.5

    def test_markovian_limit_is_exact_kernel(self):
        # at q=0 the analytic profile is the exact kernel: residual ~ round-off
        params = ModelParams(family="pq", p=3.0, dim=100, q=0.0)
        rows = pq_norm_diagnostics(params, [100, 200])
        assert all(r.generator_residual < 1e-12 for r in rows)

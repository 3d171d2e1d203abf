"""Closed-form and semi-analytic predictions for the laser families.

Contents:

* the ideal phase-diffusing beam (first/second-order Glauber functions in
  closed form, plus a Wiener Monte-Carlo cross-check),
* the f_n linewidth sums and their central Taylor approximations,
* the short-time linewidth ansatz applied to the pure phase state,
* the asymptotic coherence formula (p > 3) with the family divisors, the
  optimal p and the Airy-zero phase-estimation bound,
* the retrofiltering mean-square-error integrand reduced to closed form,
  with a brute-force 4-dimensional quadrature retained for validation.
"""

import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import gammaln

from .errors import AsymptoticWindowViolated, OutOfDomain
from .models import Family, ModelParams, build_operators
from .superop import band_block

AIRY_FIRST_ZERO = -2.338107410459767  # first zero of Ai(x)


@dataclass(frozen=True)
class IdealBeam:
    """Coherent beam undergoing pure phase diffusion: flux N and linewidth ell."""

    flux: float
    linewidth: float

    def __post_init__(self):
        if not (self.flux > 0 and self.linewidth > 0):
            raise ValueError("flux and linewidth must both be positive")

    @classmethod
    def from_observables(cls, obs):
        return cls(flux=obs.flux, linewidth=obs.linewidth)


def ideal_g1(beam: IdealBeam, s):
    """g1(s) = exp(-ell |s| / 2)."""
    return np.exp(-beam.linewidth * np.abs(s) / 2.0)


def _wiener_cov(times):
    # Cov(W_a, W_b) = (|a| + |b| - |a-b|)/2 : min(|a|,|b|) on a common
    # half-line, zero across the origin (two-sided Wiener process)
    a = np.abs(times)[..., :, None]
    b = np.abs(times)[..., None, :]
    d = np.abs(times[..., :, None] - times[..., None, :])
    return 0.5 * (a + b - d)


def ideal_g2(beam: IdealBeam, s, sp, tp, t):
    """g2(s, s', t', t) of the phase-diffusing coherent beam.

    Gaussian moment identity: the phase combination phi(t)+phi(t')-phi(s)-phi(s')
    is zero-mean normal, so g2 = exp(-(ell/2) Var[W_s + W_s' - W_t' - W_t]).
    Vanishes identically for the photon-statistics pattern (s, t, t, s),
    i.e. g2 = 1: a coherent beam is Poissonian at every delay.
    """
    times = np.stack(np.broadcast_arrays(
        np.asarray(s, float), np.asarray(sp, float),
        np.asarray(tp, float), np.asarray(t, float)), axis=-1)
    signs = np.array([1.0, 1.0, -1.0, -1.0])
    var = np.einsum("...ij,i,j->...", _wiener_cov(times), signs, signs)
    return np.exp(-beam.linewidth * var / 2.0)


def _sample_wiener(times, n_paths, rng):
    """Wiener values at the requested times via sorted independent increments."""
    times = np.asarray(times, dtype=float)
    grid = np.unique(np.concatenate([times, [0.0]]))
    incr = np.sqrt(np.diff(grid))
    steps = rng.standard_normal((n_paths, incr.size)) * incr
    w = np.concatenate([np.zeros((n_paths, 1)), np.cumsum(steps, axis=1)], axis=1)
    w -= w[:, [int(np.searchsorted(grid, 0.0))]]  # anchor W(0) = 0
    idx = np.searchsorted(grid, times)
    return w[:, idx]


def mc_g1(beam: IdealBeam, s, n_paths=100_000, seed=0):
    """Monte-Carlo estimate of g1(s) over Wiener phase paths: (mean, stderr)."""
    rng = np.random.default_rng(seed)
    w = _sample_wiener(np.array([0.0, s]), n_paths, rng)
    x = np.sqrt(beam.linewidth) * (w[:, 1] - w[:, 0])
    vals = np.cos(x)
    return float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(n_paths))


def mc_g2(beam: IdealBeam, s, sp, tp, t, n_paths=100_000, seed=0):
    """Monte-Carlo estimate of g2(s,s',t',t): (mean, stderr)."""
    rng = np.random.default_rng(seed)
    w = _sample_wiener(np.array([s, sp, tp, t]), n_paths, rng)
    x = np.sqrt(beam.linewidth) * (w[:, 2] + w[:, 3] - w[:, 0] - w[:, 1])
    vals = np.cos(x)
    return float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(n_paths))


# ---------------------------------------------------------------------------
# f_n sums and the linewidth ansatz


class SumRegime(str, Enum):
    EDGE_DOMINATED = "edge"      # p < 3: extreme elements carry the sum
    CENTER_DOMINATED = "center"  # p > 3: the O(D) central elements dominate


@dataclass(frozen=True)
class FnSum:
    family: Family
    elements: np.ndarray
    approx_elements: np.ndarray
    total: float
    regime: SumRegime


def _band1_apply(params):
    ops = build_operators(params)
    return ops, band_block(ops, params, 1)


def fn_elements(params: ModelParams) -> FnSum:
    """Exact f_n elements of the family's linewidth sum, with Taylor overlay.

    For the flat-gain family the elements are the diagonal of
    L^dag [Liouvillian applied to (L rho_ss)]; for the other two families
    they are the band-1 elements of the Liouvillian applied to the pure
    phase state.  The central Taylor approximation multiplies the flat-gain
    form by (2 lam^2 - 2 lam + 1) or (1 + q/2)^2 respectively.
    """
    ops, b1 = _band1_apply(params)
    rho = ops.rho
    if params.family is Family.P:
        y = b1.matvec(ops.loss * rho[1:])
        elements = np.concatenate(([0.0], ops.loss * y))
        centers = np.arange(params.dim)
    else:
        elements = b1.matvec(np.sqrt(rho[:-1] * rho[1:]))
        centers = np.arange(params.dim - 1)
    D = params.dim
    x = np.pi * (centers + 1) / (D + 1)
    pref = -(np.pi**4.5 * params.p**2 / (8.0 * (D + 1) ** 5)) * np.exp(
        gammaln((2.0 + params.p) / 2.0) - gammaln((1.0 + params.p) / 2.0))
    approx = pref * (1.0 + 1.0 / np.tan(x) ** 2) ** 2 * np.sin(x) ** params.p
    if params.family is Family.PLAMBDA:
        approx = (2.0 * params.lam**2 - 2.0 * params.lam + 1.0) * approx
    elif params.family is Family.PQ:
        approx = (1.0 + params.q / 2.0) ** 2 * approx
    # the sum flips from center- to edge-dominated at p = 3: the O(D)
    # central terms contribute Theta(D^-4) while each extreme element is
    # Theta(D^-(p+1)); compare contributions, not single elements
    edge = abs(elements[0]) + abs(elements[1]) + abs(elements[-1]) + abs(elements[-2])
    interior = float(np.abs(elements[2:-2]).sum())
    regime = (SumRegime.EDGE_DOMINATED if edge > interior
              else SumRegime.CENTER_DOMINATED)
    return FnSum(family=params.family, elements=elements, approx_elements=approx,
                 total=float(elements.sum()), regime=regime)


def linewidth_ansatz(params: ModelParams):
    """Short-time linewidth estimate ell = -2 sum_n (Liouvillian varrho)_{n,n+1}.

    varrho is the pure phase state with band-1 elements sqrt(rho_n rho_{n+1})
    built on the analytic profile; the Liouvillian acts band-locally, so the
    sum is a single band-1 application.
    """
    ops, b1 = _band1_apply(params)
    b = np.sqrt(ops.rho[:-1] * ops.rho[1:])
    return -2.0 * float(b1.matvec(b).sum())


# ---------------------------------------------------------------------------
# asymptotic coherence formulas


def coherence_prefactor(p):
    """Prefactor c(p) of the flat-gain asymptote coherence = c(p) mu^4, p > 3."""
    p = float(p)
    if p <= 3.0:
        raise OutOfDomain(f"closed-form coherence requires p > 3, got p = {p}")
    return (256.0 / (np.pi**4 * p**2)) * np.exp(
        gammaln((p + 1.0) / 2.0) + gammaln((p - 2.0) / 2.0)
        - gammaln((p + 2.0) / 2.0) - gammaln((p - 3.0) / 2.0))


def family_divisor(params: ModelParams):
    """Family divisor: coherence(family) = coherence(p-family) / divisor."""
    if params.family is Family.PLAMBDA:
        return 2.0 * (params.lam - 0.5) ** 2 + 0.5
    if params.family is Family.PQ:
        return (1.0 + params.q / 2.0) ** 2
    return 1.0


def coherence_formula(params: ModelParams):
    """Asymptotic (D -> infinity, p > 3) coherence of the model."""
    return coherence_prefactor(params.p) * params.mu**4 / family_divisor(params)


def optimal_p():
    """argmax over p > 3 of the coherence prefactor (= 4.1479...)."""
    res = minimize_scalar(lambda p: -coherence_prefactor(p), bounds=(3.05, 8.0),
                          method="bounded", options={"xatol": 1e-10})
    return float(res.x)


def heisenberg_bound(mu):
    """Lower bound 4 |z_A/3|^3 mu^-2 on the phase-estimation mean-square error."""
    if mu <= 0:
        raise ValueError("mu must be positive")
    return 4.0 * (abs(AIRY_FIRST_ZERO) / 3.0) ** 3 / mu**2


# ---------------------------------------------------------------------------
# retrofiltering mean-square error of the ideal beam


def mse_minimizing_window(beam: IdealBeam):
    """tau minimizing the ideal retrofiltering MSE: sqrt(3 / (2 N ell))."""
    return np.sqrt(1.5 / (beam.flux * beam.linewidth))


def measurement_window(coherence, flux):
    """Condition-4 time window tau = sqrt(3 C / 2) / N."""
    return np.sqrt(1.5 * coherence) / flux


def _i1(ell, tau):
    # int_0^tau int_0^tau exp(-ell|u-v|/2): stable via x + expm1(-x)
    x = ell * tau / 2.0
    return (8.0 / ell**2) * (x + np.expm1(-x))


def _i2(ell, tau):
    # int_0^tau int_0^tau exp(-(ell/2)(max + 3 min)); series for tiny ell*tau
    y = ell * tau
    if y < 1e-4:
        return tau**2 * (1.0 - (5.0 / 6.0) * y + (7.0 / 16.0) * y * y)
    return (2.0 - (8.0 / 3.0) * np.exp(-y / 2.0) + (2.0 / 3.0) * np.exp(-2.0 * y)) / ell**2


def retrofiltering_mse_ideal(beam: IdealBeam, tau=None, return_parts=False):
    """Mean-square error of retrofiltering phase estimation on the ideal beam.

    The four-dimensional g2 integrals factor into products of 2-d integrals
    of exponentials (the Wiener covariance splits across the origin), giving

        MSE(tau) = 1/(2 N^2 tau^2) + I1/(N tau^3) + (I1^2 - I2^2)/(2 tau^4)

    with I1, I2 in closed form.  ``tau = None`` uses the minimizing window
    sqrt(3/(2 N ell)), at which MSE -> 2 sqrt(2 ell / 3 N) to leading order.
    Warns when the window leaves the ell*tau << 1 << N*tau regime.
    """
    N, ell = beam.flux, beam.linewidth
    if tau is None:
        tau = mse_minimizing_window(beam)
    if ell * tau > 0.1 or N * tau < 10.0:
        warnings.warn(
            f"window tau = {tau:.3g} violates ell*tau << 1 << N*tau "
            f"(ell*tau = {ell * tau:.3g}, N*tau = {N * tau:.3g})",
            AsymptoticWindowViolated)
    i1 = _i1(ell, tau)
    i2 = _i2(ell, tau)
    parts = (1.0 / (2.0 * N**2 * tau**2),
             i1 / (N * tau**3),
             (i1**2 - i2**2) / (2.0 * tau**4))
    if return_parts:
        return sum(parts), parts
    return sum(parts)


def retrofiltering_mse_asymptote(beam: IdealBeam):
    """Leading-order MSE at the optimal window: 2 sqrt(2 ell / 3 N)."""
    return 2.0 * np.sqrt(2.0 * beam.linewidth / (3.0 * beam.flux))


def retrofiltering_mse_bruteforce(beam: IdealBeam, tau, n_nodes=24):
    """Direct 4-dimensional Gauss-Legendre quadrature of the MSE integrand.

    Validation path for the closed-form reduction; coarse by design.
    """
    N, ell = beam.flux, beam.linewidth
    x, wq = np.polynomial.legendre.leggauss(n_nodes)
    pos = 0.5 * tau * (x + 1.0)
    neg = -pos
    wt = 0.5 * tau * wq

    def quad4(sa, sb, sc, sd):
        s, sp, tp, t = np.meshgrid(sa, sb, sc, sd, indexing="ij")
        w4 = (wt[:, None, None, None] * wt[None, :, None, None]
              * wt[None, None, :, None] * wt[None, None, None, :])
        return float(np.sum(w4 * ideal_g2(beam, s, sp, tp, t)))

    term_a = quad4(pos, neg, pos, neg)
    term_b = quad4(pos, pos, neg, neg)
    u, v = np.meshgrid(pos, pos, indexing="ij")
    i1 = float(np.sum(wt[:, None] * wt[None, :] * np.exp(-ell * np.abs(u - v) / 2.0)))
    return (1.0 / (2.0 * N**2 * tau**2) + i1 / (N * tau**3)
            + (term_a - term_b) / (2.0 * tau**4))

"""Beam observables from a band-resolved Liouvillian.

All beam quantities reduce to band-local linear algebra:

* the steady state and the Mandel-Q resolvent live on band 0,
* the coherence and g1 live on band 1 (the stationary mode sits entirely on
  band 0, so no deflation is needed there),
* general two-time/four-point Glauber functions walk across bands
  {0, +-1, +-2} by applying the loss operator from the left (a ``b`` event)
  or its adjoint from the right (a ``b^dag`` event) between exponential
  propagations.

Time is measured in flux units (N = 1 master equation); the actual flux
F = sum_n L_n^2 rho_n is always computed and used for normalisation rather
than assumed to be 1.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.integrate import quad

from .errors import DegenerateKernel, HorizonTooShort, SingularBandOne
from .models import Family, ModelParams
from .superop import BandLiouvillian, band0_spectral_gap, build_transfer

_NEG_CLIP = 1e-12


@dataclass(frozen=True)
class BeamObservables:
    """Flux, coherence, linewidth and Mandel-Q of one model instance.

    ``linewidth`` is defined as 4*flux/coherence, so the identity
    linewidth * coherence = 4 * flux holds to round-off by construction.
    """

    params: ModelParams
    dim: int
    flux: float
    coherence: float
    linewidth: float
    mandel_q: float
    solver_residual: float

    def ideal_tuple(self):
        return self.flux, self.linewidth


@dataclass(frozen=True)
class CorrelationTrace:
    """Sampled normalized Glauber function: kind is 'g1' or 'g2ps'."""

    times: np.ndarray
    values: np.ndarray
    kind: str


def _bordered_solve(block, column, rhs_top, rhs_bottom=0.0):
    """Solve [[M, column], [1^T, 0]] [x, s] = [rhs_top, rhs_bottom] -> x.

    The all-ones row is the left null vector of every generator/defect block
    used here, which pins the auxiliary scalar s to 0 and makes the system
    nonsingular exactly when the kernel is one-dimensional.
    """
    n = block.n
    A = sp.lil_matrix((n + 1, n + 1))
    A[:n, :n] = block.to_sparse()
    A[:n, n] = np.asarray(column).reshape(-1, 1)
    A[n, :n] = 1.0
    rhs = np.concatenate([rhs_top, [rhs_bottom]])
    try:
        x = spla.splu(A.tocsc()).solve(rhs)
    except RuntimeError as exc:
        raise DegenerateKernel(f"bordered band-0 solve failed: {exc}") from exc
    if not np.all(np.isfinite(x)):
        raise DegenerateKernel("bordered band-0 solve produced non-finite entries")
    return x[:n]


def steady_state(liou: BandLiouvillian, check_unique=True):
    """Unit-trace kernel of the band-0 block, clipped per round-off policy.

    For the Markovian families the kernel is positive up to round-off:
    entries in [-1e-12, 0) are clipped to zero and anything more negative
    aborts.  The regular-pumping family evolves under an approximate
    generator whose exact kernel carries a small negative weight near the
    top edge (decaying rapidly with D); those entries are clipped with a
    generous allowance and only a gross defect (below -5% of the peak)
    aborts.  Resolvent computations use the unclipped kernel internally so
    that L rho_ss = 0 holds exactly.

    With ``check_unique`` the two band-0 eigenvalues nearest zero are
    computed and a gap below 1e-12 raises :class:`DegenerateKernel`.
    """
    x = liou.steady_state_vector()
    floor = -_NEG_CLIP
    if liou.params.family is Family.PQ:
        floor = min(floor, -0.05 * float(x.max()))
    if x.min() < floor:
        raise DegenerateKernel(
            f"steady state has a negative weight {x.min():.3e} below the clip threshold")
    x = np.clip(x, 0.0, None)
    x = x / x.sum()
    if check_unique:
        gaps = band0_spectral_gap(liou, k=2)
        if gaps[1] < 1e-12:
            raise DegenerateKernel(
                f"two band-0 eigenvalues within 1e-12 of zero (|lam_2| = {gaps[1]:.3e})")
    return x


def flux(liou: BandLiouvillian, rho_ss=None):
    """Photon flux F = sum_n L_n^2 rho_n."""
    if rho_ss is None:
        rho_ss = liou.steady_state_vector()
    return float(liou.ops.loss_sq_diag() @ rho_ss)


def _band1_vectors(liou, rho_ss):
    # v = band-1 vector of L rho_ss ; w = band-1 trace weights of (.)L^dag
    v = liou.ops.loss * rho_ss[1:]
    w = liou.ops.loss
    return v, w


def coherence(liou: BandLiouvillian):
    value, _ = coherence_with_residual(liou)
    return value


def coherence_with_residual(liou: BandLiouvillian):
    """Beam coherence via the deflation-free band-1 resolvent.

    Evaluates -2 * w^T inv(L_1) v with v the band-1 vector of L rho_ss and
    w the band-1 trace weights; equal to the integral of the unnormalised
    first-order Glauber function over all time offsets.  Returns
    ``(coherence, normwise backward error of the band-1 solve)``.
    """
    rho_ss = liou.steady_state_vector()
    v, w = _band1_vectors(liou, rho_ss)
    b1 = liou.block(1)
    try:
        y = b1.solve(v, refine=1)
    except np.linalg.LinAlgError as exc:
        raise SingularBandOne(f"band-1 solve failed: {exc}") from exc
    if not np.all(np.isfinite(y)):
        raise SingularBandOne("band-1 solve produced non-finite entries")
    resid = b1.residual(y, v)
    if resid > 1e-6:
        raise SingularBandOne(f"band-1 solve residual {resid:.2e} too large")
    value = -2.0 * float(w @ y)
    if value <= 0.0:
        raise SingularBandOne(f"coherence came out non-positive ({value:.3e})")
    return value, float(resid)


def _emission_band0(liou, rho_ss):
    # band-0 vector of L rho_ss L^dag (the photon-emission superoperator J)
    j = np.zeros_like(rho_ss)
    j[:-1] = liou.ops.loss**2 * rho_ss[1:]
    return j


def mandel_q(liou: BandLiouvillian):
    """Long-window Mandel-Q via the deflated band-0 resolvent.

    Q = -(2/F) u^T inv_deflated(L_0) chi with chi = J rho_ss - F rho_ss
    (traceless) and u the emission trace weights; the deflated solve is the
    unique solution with zero trace, matching the integral of the intensity
    autocovariance that defines Q for T -> infinity.
    """
    rho_ss = liou.steady_state_vector()
    F = flux(liou, rho_ss)
    j = _emission_band0(liou, rho_ss)
    chi = j - F * rho_ss
    y = _bordered_solve(liou.block(0), rho_ss, chi)
    u = liou.ops.loss_sq_diag()
    q = -2.0 / F * float(u @ y)
    # The regular-pumping master equation is approximate: at small D its Q
    # can undershoot the physical floor by an O(1/D) margin that vanishes
    # with D.  Only a gross violation is treated as a solver failure.
    floor = -1.0 - (0.05 if liou.params.family is Family.PQ else 1e-9)
    if q < floor:
        raise DegenerateKernel(f"Mandel-Q = {q} below the physical floor of -1")
    return q


def mandel_q_discrete(liou: BandLiouvillian, gamma):
    """Mandel-Q of the discrete-time (Kraus/transfer-matrix) beam at step gamma.

    Counting statistics of the beam qubits give
    Q(gamma) = -gamma*F + (2*gamma/F) u^T inv(I - T0)|_deflated chi, with all
    pieces evaluated at the discrete steady state of the transfer matrix.
    The -gamma*F term is the single-qubit dead-time correction that vanishes
    in the continuous limit; Q(gamma) -> Q linearly in gamma.
    """
    ts = build_transfer(liou.ops, gamma)
    t0 = ts.band_block(0)
    defect = _negate_block(t0, identity_shift=True)  # I - T0
    rho_g = _bordered_solve(defect, liou.ops.rho, np.zeros(t0.n), rhs_bottom=1.0)
    j = _emission_band0(liou, rho_g)
    F = float(j.sum())
    chi = j - F * rho_g
    y = _bordered_solve(defect, rho_g, chi)
    u = liou.ops.loss_sq_diag()
    return -gamma * F + (2.0 * gamma / F) * float(u @ y)


def _negate_block(block, identity_shift=False):
    from .superop import BandBlock

    diags = {o: -v for o, v in block.diags.items()}
    if identity_shift:
        d0 = diags.get(0, np.zeros(block.n))
        diags[0] = d0 + 1.0
    return BandBlock(n=block.n, diags=diags)


def mandel_q_gamma_extrapolated(liou: BandLiouvillian, gammas=(1e-3, 5e-4)):
    """Linear-in-gamma extrapolation of the discrete Q to gamma -> 0."""
    g1, g2 = gammas
    q1 = mandel_q_discrete(liou, g1)
    q2 = mandel_q_discrete(liou, g2)
    return (q1 * g2 - q2 * g1) / (g2 - g1)


def g1_trace(liou: BandLiouvillian, times):
    """Normalised first-order Glauber function g1(s, 0) on a grid of s >= 0."""
    times = np.asarray(times, dtype=float)
    if np.any(times < 0):
        raise ValueError("g1_trace expects non-negative time offsets")
    rho_ss = liou.steady_state_vector()
    F = flux(liou, rho_ss)
    v, w = _band1_vectors(liou, rho_ss)
    vals = liou.propagator(1).act_many(v, times) @ w / F
    return CorrelationTrace(times=times, values=vals, kind="g1")


def _apply_loss_left(liou, b, k):
    """Left multiplication by L on a band-k vector: band k -> k+1."""
    a = liou.ops.loss
    if k >= 0:
        return a[: b.size - 1] * b[1:]
    kk = -k
    out = np.zeros(b.size + 1)
    out[: b.size] = a[kk - 1 : kk - 1 + b.size] * b
    return out


def _apply_loss_dag_right(liou, b, k):
    """Right multiplication by L^dag on a band-k vector: band k -> k-1."""
    a = liou.ops.loss
    if k >= 1:
        out = np.zeros(b.size + 1)
        out[: b.size] = b * a[k - 1 : k - 1 + b.size]
        return out
    return b[1:] * a[: b.size - 1]


def g2_general(liou: BandLiouvillian, s, sp_, tp, t):
    """Normalised second-order Glauber function <b+(s) b+(s') b(t') b(t)> / F^2.

    Arbitrary time arguments: events are sorted causally; each ``b`` event
    applies L from the left (band k -> k+1), each ``b^dag`` event applies
    L^dag from the right (band k -> k-1), with exponential propagation of
    the current band vector between events.  Depends only on differences of
    the four times.
    """
    events = sorted([(float(s), 1), (float(sp_), 1), (float(tp), 0), (float(t), 0)])
    rho_ss = liou.steady_state_vector()
    F = flux(liou, rho_ss)
    w = rho_ss.copy()
    k = 0
    prev = events[0][0]
    for time, isdag in events:
        dt = time - prev
        if dt > 0:
            w = liou.propagator(k).act(w, dt)
        prev = time
        if isdag:
            w = _apply_loss_dag_right(liou, w, k)
            k -= 1
        else:
            w = _apply_loss_left(liou, w, k)
            k += 1
    return float(w.sum()) / F**2


def g2_ps_trace(liou: BandLiouvillian, times):
    """Photon-statistics correlation g2_ps(s) = g2(0, s, s, 0) on a grid."""
    times = np.asarray(times, dtype=float)
    if np.any(times < 0):
        raise ValueError("g2_ps_trace expects non-negative delays")
    rho_ss = liou.steady_state_vector()
    F = flux(liou, rho_ss)
    chi = _emission_band0(liou, rho_ss) - F * rho_ss  # traceless: decays to 0
    u = liou.ops.loss_sq_diag()
    vals = 1.0 + liou.propagator(0).act_many(chi, times) @ u / F**2
    return CorrelationTrace(times=times, values=vals, kind="g2ps")


def mandel_q_from_g2(liou: BandLiouvillian, horizon, tail_rtol=1e-6):
    """Mandel-Q by quadrature of the finite-window counting formula.

    Q_T = 2F * int_0^T (1 - s/T) (g2_ps(s) - 1) ds, evaluated at T = horizon
    as the approximation to the T -> infinity limit.  Raises
    :class:`HorizonTooShort` when the window is degenerate or the intensity
    correlations have not decayed at its end.
    """
    if horizon <= 0:
        raise HorizonTooShort("counting window must be positive")
    rho_ss = liou.steady_state_vector()
    F = flux(liou, rho_ss)
    chi = _emission_band0(liou, rho_ss) - F * rho_ss  # traceless: decays to 0
    u = liou.ops.loss_sq_diag()
    prop = liou.propagator(0)

    def excess(s_):
        return float(u @ prop.act(chi, s_)) / F**2

    e0 = excess(0.0)
    etail = excess(horizon)
    if abs(etail) > max(1e-10, tail_rtol * abs(e0)):
        raise HorizonTooShort(
            f"g2_ps(T) - 1 = {etail:.3e} has not decayed at the horizon "
            f"(g2_ps(0) - 1 = {e0:.3e})")
    breaks = np.geomspace(max(horizon * 1e-8, 1e-12), horizon, 16)[:-1]
    val, _ = quad(lambda s_: (1.0 - s_ / horizon) * excess(s_), 0.0, horizon,
                  points=breaks, limit=400)
    return 2.0 * F * val


def compute_observables(liou: BandLiouvillian) -> BeamObservables:
    """Flux, coherence, linewidth and Mandel-Q bundle for one model."""
    steady_state(liou)  # uniqueness + positivity-policy gate
    F = flux(liou)
    c, resid = coherence_with_residual(liou)
    q = mandel_q(liou)
    return BeamObservables(params=liou.params, dim=liou.dim, flux=F,
                           coherence=c, linewidth=4.0 * F / c, mandel_q=q,
                           solver_residual=resid)

"""Verification experiments: power-law fits, deviation scans, oracle harness.

The deviation scans quantify how far a model's Glauber functions sit from
those of the phase-diffusing ideal beam with the same flux and linewidth:
``|dg1|`` is searched over a single delay (translation invariance), while
``|dg2|`` needs a three-parameter search over a time window of width
tau = sqrt(3 C / 2)/N (one time pinned at the window edge), run as a coarse
grid plus deterministic multi-start Nelder-Mead restarts.  The oracle harness replays every observable through
the dense D^2 x D^2 flattened-space formulas and demands agreement with the
band route to 1e-10.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm, solve
from scipy.optimize import minimize, minimize_scalar
from scipy.stats import norm as _norm

from . import observables as obs
from .analytics import IdealBeam, ideal_g1, ideal_g2, measurement_window
from .errors import InsufficientSamples, OptimizerStall
from .models import Family, ModelParams, build_operators
from .superop import dense_oracle, liouvillian_for, loss_matrix, unvec, vec


# ---------------------------------------------------------------------------
# power-law fitting


@dataclass(frozen=True)
class PowerLawFit:
    prefactor: float
    exponent: float
    stderr_exponent: float
    window: tuple
    samples: tuple
    runs_pvalue: float

    def predict(self, x):
        return self.prefactor * np.asarray(x, dtype=float) ** self.exponent


def runs_test_pvalue(residuals):
    """Wald-Wolfowitz runs test on residual signs (normal approximation)."""
    signs = np.sign(residuals)
    signs = signs[signs != 0]
    n1 = int(np.sum(signs > 0))
    n2 = int(np.sum(signs < 0))
    if n1 == 0 or n2 == 0:
        return 1.0
    runs = 1 + int(np.sum(signs[1:] != signs[:-1]))
    mean = 1.0 + 2.0 * n1 * n2 / (n1 + n2)
    var = (2.0 * n1 * n2 * (2.0 * n1 * n2 - n1 - n2)
           / ((n1 + n2) ** 2 * (n1 + n2 - 1.0)))
    if var <= 0:
        return 1.0
    z = (runs - mean) / math.sqrt(var)
    return float(2.0 * (1.0 - _norm.cdf(abs(z))))


def loglog_slope(samples):
    """Bare least-squares slope of log y vs log x (no sample-count gate).

    Diagnostic fits over three-point grids use this; :func:`fit_power_law`
    keeps the >= 4 sample requirement of the reporting type.
    """
    lx = np.log([x for x, _ in samples])
    ly = np.log([y for _, y in samples])
    return float(np.polyfit(lx, ly, 1)[0])


def fit_power_law(samples, window=None, fixed_exponent=None) -> PowerLawFit:
    """Least-squares power law y = c x^w on log-log values.

    ``window = (lo, hi)`` restricts the x-range; ``fixed_exponent`` pins w
    and fits only the prefactor.  At least four positive samples required.
    """
    pts = [(float(x), float(y)) for x, y in samples]
    if window is not None:
        lo, hi = window
        pts = [(x, y) for x, y in pts if lo <= x <= hi]
    if len(pts) < 4:
        raise InsufficientSamples(f"power-law fit needs >= 4 samples, got {len(pts)}")
    if any(x <= 0 or y <= 0 for x, y in pts):
        raise InsufficientSamples("power-law fit needs strictly positive samples")
    lx = np.log([x for x, _ in pts])
    ly = np.log([y for _, y in pts])
    if fixed_exponent is not None:
        w = float(fixed_exponent)
        logc = float(np.mean(ly - w * lx))
        resid = ly - (logc + w * lx)
        return PowerLawFit(prefactor=float(np.exp(logc)), exponent=w,
                           stderr_exponent=0.0,
                           window=tuple(window) if window else
                               (float(np.exp(lx.min())), float(np.exp(lx.max()))),
                           samples=tuple(pts), runs_pvalue=runs_test_pvalue(resid))
    w, logc = np.polyfit(lx, ly, 1)
    resid = ly - (logc + w * lx)
    dof = len(pts) - 2
    sxx = float(np.sum((lx - lx.mean()) ** 2))
    stderr = float(np.sqrt(max(np.sum(resid**2), 0.0) / dof / sxx)) if dof > 0 else 0.0
    return PowerLawFit(prefactor=float(np.exp(logc)), exponent=float(w),
                       stderr_exponent=stderr,
                       window=tuple(window) if window else (float(np.exp(lx.min())), float(np.exp(lx.max()))),
                       samples=tuple(pts), runs_pvalue=runs_test_pvalue(resid))


# ---------------------------------------------------------------------------
# condition-4 deviation scans


@dataclass(frozen=True)
class G1Deviation:
    dim: int
    max_dev: float
    arg_time: float
    window: float


@dataclass(frozen=True)
class G2Deviation:
    dim: int
    coherence: float
    flux: float
    linewidth: float
    max_dev: float
    arg_times: tuple
    tau: float


@dataclass(frozen=True)
class DeviationReport:
    """Condition-4 deviation maxima and their coherence scaling.

    ``delta_g2`` holds the certified global maxima over the time window;
    ``delta_g2_corner`` holds the near-degenerate-corner optimum (all four
    times nearly coincident, equal to |1 - g2_ps(0)| at exact coincidence),
    which is the quantity whose C^-1/2 scaling the deviation condition
    quotes.  The two coincide for the p,lambda family;
    for the regular pump at small D the global maximum sits at maximal
    separation and decays faster than C^-1/2 before joining the corner
    branch.  ``fit_g2`` is the corner fit; ``fit_g2_global`` the other.
    """

    d_list: tuple
    tau_used: tuple
    delta_g1: tuple
    delta_g2: tuple
    delta_g2_corner: tuple
    fit_g2: PowerLawFit
    fit_g2_global: PowerLawFit

    def mse_inflation_bounds(self):
        """Per-dimension (D, bound) pairs from the recorded deviation maxima."""
        return tuple(
            (g2.dim, mse_inflation_bound(g1.max_dev, g2.max_dev,
                                         g2.flux, g2.linewidth))
            for g1, g2 in zip(self.delta_g1, self.delta_g2))


def mse_inflation_bound(dev_g1, dev_g2, flux, linewidth):
    """Relative retrofiltering-MSE excess implied by the deviation maxima.

    A beam whose Glauber functions deviate from the ideal ones by at most
    ``dev_g1`` and ``dev_g2`` over the measurement window has its
    phase-estimation mean-square error inflated by a factor 1 + |Delta|
    with |Delta| <= dev_g1 + sqrt(N/ell) * dev_g2 relative to the ideal
    beam.  Deviations bounded as O(1) and O(C^-1/2) keep this O(1), which
    is what preserves the fourth-power coherence ceiling.
    """
    return dev_g1 + np.sqrt(flux / linewidth) * dev_g2


def condition4_g1(params_list, coarse=200, window_coherence_times=10.0):
    """Per-model maximum of |g1_laser - g1_ideal| over s in [0, 10/ell].

    Coarse grid of `coarse` points, then bounded golden-section refinement
    around the three best brackets.  Deterministic.
    """
    out = []
    for params in params_list:
        liou = liouvillian_for(params)
        beam_obs = obs.compute_observables(liou)
        ell = beam_obs.linewidth
        beam = IdealBeam.from_observables(beam_obs)
        window = window_coherence_times / ell
        rho_ss = obs.steady_state(liou, check_unique=False)
        v = liou.ops.loss * rho_ss[1:]
        w = liou.ops.loss
        prop = liou.propagator(1)

        def dev(s):
            g1 = float(w @ prop.act(v, float(s))) / beam_obs.flux
            return abs(g1 - float(ideal_g1(beam, s)))

        grid = np.linspace(0.0, window, coarse)
        vals = np.abs(prop.act_many(v, grid) @ w / beam_obs.flux
                      - ideal_g1(beam, grid))
        order = np.argsort(vals)[::-1][:3]
        best_val, best_s = float(vals.max()), float(grid[int(np.argmax(vals))])
        h = grid[1] - grid[0]
        for i in order:
            lo = max(0.0, grid[i] - h)
            hi = min(window, grid[i] + h)
            res = minimize_scalar(lambda s_: -dev(s_), bounds=(lo, hi),
                                  method="bounded", options={"xatol": 1e-9 * window})
            if -res.fun > best_val:
                best_val, best_s = float(-res.fun), float(res.x)
        out.append(G1Deviation(dim=params.dim, max_dev=best_val,
                               arg_time=best_s, window=window))
    return out


def _clamp_degenerate(times, tau):
    """Spread near-coincident times by 1e-9 tau so g2 stays well-ordered."""
    eps = 1e-9 * tau
    ts = np.array(times, dtype=float)
    order = np.argsort(ts, kind="stable")
    sorted_ts = ts[order]
    for i in range(1, sorted_ts.size):
        if sorted_ts[i] - sorted_ts[i - 1] < eps:
            sorted_ts[i] = sorted_ts[i - 1] + eps
    ts[order] = sorted_ts
    return tuple(ts)


def _g2_objective(liou, beam, pinned, half):
    def objective(x):
        x = np.clip(x, -half, half)
        g2l = obs.g2_general(liou, pinned, x[0], x[1], x[2])
        g2i = float(ideal_g2(beam, pinned, x[0], x[1], x[2]))
        return -abs(g2l - g2i)

    return objective


def _g2_deviation_search(liou, beam_obs, n_starts, rng, n_probes):
    # window of WIDTH tau: pin one time at +tau/2, the rest in [-tau/2, tau/2]
    tau = measurement_window(beam_obs.coherence, beam_obs.flux)
    half = tau / 2.0
    beam = IdealBeam.from_observables(beam_obs)
    objective = _g2_objective(liou, beam, half, half)

    grid = np.linspace(-half, half, 9)
    coarse = [(objective((a, b, c)), (a, b, c))
              for a in grid for b in grid for c in grid]
    coarse.sort(key=lambda t: t[0])
    starts = [np.array(x0) for _, x0 in coarse[: max(1, n_starts // 2)]]
    while len(starts) < n_starts:
        starts.append(rng.uniform(-half, half, size=3))
    best_fun, best_x = coarse[0][0], np.array(coarse[0][1])
    for x0 in starts:
        res = minimize(objective, x0, method="Nelder-Mead",
                       options={"xatol": 1e-10 * tau, "fatol": 1e-14,
                                "maxiter": 4000})
        if res.fun < best_fun:
            best_fun, best_x = float(res.fun), np.clip(res.x, -half, half)
    # certification: the optimum must dominate random probes; re-polish if not
    for _ in range(n_probes):
        xp = rng.uniform(-half, half, size=3)
        fp = objective(xp)
        if fp < best_fun:
            res = minimize(objective, xp, method="Nelder-Mead",
                           options={"xatol": 1e-10 * tau, "fatol": 1e-14,
                                    "maxiter": 4000})
            if res.fun < best_fun:
                best_fun, best_x = float(res.fun), np.clip(res.x, -half, half)
    arg = _clamp_degenerate((half, *best_x), tau)
    return -best_fun, arg, tau


def _g2_corner_search(liou, beam_obs):
    """Local optimum at the near-degenerate corner (all times coincident).

    This is the quantity whose coherence scaling the deviation-condition
    analysis quotes; at exact coincidence it equals |1 - g2_ps(0)|.  A
    Nelder-Mead polish with a small simplex is allowed to move the times
    apart slightly but stays in the corner basin.
    """
    tau = measurement_window(beam_obs.coherence, beam_obs.flux)
    half = tau / 2.0
    beam = IdealBeam.from_observables(beam_obs)
    objective = _g2_objective(liou, beam, half, half)
    x0 = np.full(3, half)
    simplex = np.vstack([x0, x0 - np.diag(np.full(3, 0.02 * tau))])
    res = minimize(objective, x0, method="Nelder-Mead",
                   options={"xatol": 1e-10 * tau, "fatol": 1e-14,
                            "maxiter": 2000, "initial_simplex": simplex})
    corner_val = -objective(x0)
    if -res.fun > corner_val:
        corner_val = float(-res.fun)
        best_x = np.clip(res.x, -half, half)
    else:
        best_x = x0
    arg = _clamp_degenerate((half, *best_x), tau)
    return corner_val, arg, tau


def condition4_g2(params_list, n_starts=8, seed=0, n_probes=30,
                  verify_determinism=False) -> DeviationReport:
    """Deviation maxima |g2_laser - g2_ideal| per model over the time window.

    One of the four times is pinned at the window edge; the remaining three
    run over the width-tau box with a 9^3 coarse grid followed by `n_starts`
    Nelder-Mead restarts (grid-ranked plus seeded random), then a 30-probe
    domination check.  The near-degenerate-corner optimum is recorded
    separately and carries the reference coherence fit (see
    :class:`DeviationReport`).  Also records the g1 deviation maxima for
    the same models.
    """
    g2_rows = []
    corner_rows = []
    taus = []
    for params in params_list:
        liou = liouvillian_for(params)
        beam_obs = obs.compute_observables(liou)
        rng = np.random.default_rng([seed, params.dim])
        val, arg, tau = _g2_deviation_search(liou, beam_obs, n_starts, rng, n_probes)
        if verify_determinism:
            rng2 = np.random.default_rng([seed, params.dim])
            val2, _, _ = _g2_deviation_search(liou, beam_obs, n_starts, rng2, n_probes)
            if abs(val2 - val) > 1e-6:
                raise OptimizerStall(
                    f"re-run with seed {seed} moved the optimum by {abs(val2 - val):.3e}")
        cval, carg, _ = _g2_corner_search(liou, beam_obs)
        g2_rows.append(G2Deviation(dim=params.dim, coherence=beam_obs.coherence,
                                   flux=beam_obs.flux,
                                   linewidth=beam_obs.linewidth,
                                   max_dev=val, arg_times=arg, tau=tau))
        corner_rows.append(G2Deviation(dim=params.dim,
                                       coherence=beam_obs.coherence,
                                       flux=beam_obs.flux,
                                       linewidth=beam_obs.linewidth,
                                       max_dev=cval, arg_times=carg, tau=tau))
        taus.append(tau)
    g1_rows = condition4_g1(params_list)
    enough = len(g2_rows) >= 4
    fit_corner = (fit_power_law([(r.coherence, r.max_dev) for r in corner_rows])
                  if enough else None)
    fit_global = (fit_power_law([(r.coherence, r.max_dev) for r in g2_rows])
                  if enough else None)
    return DeviationReport(d_list=tuple(p.dim for p in params_list),
                           tau_used=tuple(taus),
                           delta_g1=tuple(g1_rows),
                           delta_g2=tuple(g2_rows),
                           delta_g2_corner=tuple(corner_rows),
                           fit_g2=fit_corner,
                           fit_g2_global=fit_global)


# ---------------------------------------------------------------------------
# regime scan


@dataclass(frozen=True)
class RegimePoint:
    p: float
    exponent: float
    stderr: float
    classification: str


def regime_scan(family, p_grid, d_grid, lam=0.0, q=0.0):
    """Fitted coherence exponent w(p) over the D grid, with regime labels."""
    if not len(p_grid) or not len(d_grid):
        raise InsufficientSamples("regime_scan needs nonempty grids")
    rows = []
    for p in p_grid:
        samples = []
        for D in d_grid:
            params = ModelParams(family=family, p=float(p), dim=int(D), lam=lam, q=q)
            liou = liouvillian_for(params, max_band=1)
            samples.append((params.mu, obs.coherence(liou)))
        fit = fit_power_law(samples)
        is_h = abs(fit.exponent - 4.0) <= 0.3
        is_s = abs(fit.exponent - (p + 1.0)) <= 0.3
        if is_h and not is_s:
            label = "heisenberg"
        elif is_s and not is_h:
            label = "sub-heisenberg"
        else:
            label = "crossover"
        rows.append(RegimePoint(p=float(p), exponent=fit.exponent,
                                stderr=fit.stderr_exponent, classification=label))
    return rows


# ---------------------------------------------------------------------------
# dense-oracle equivalence harness


def _dense_steady_state(Ld, D):
    n = D * D
    eye_vec = vec(np.eye(D))
    guess = vec(np.eye(D) / D)
    A = np.zeros((n + 1, n + 1))
    A[:n, :n] = Ld
    A[:n, n] = guess
    A[n, :n] = eye_vec
    rhs = np.zeros(n + 1)
    rhs[n] = 1.0
    x = solve(A, rhs)[:n]
    return unvec(x, D)


def _dense_deflated_solve(Ld, rho_vec, rhs):
    eye_vec = vec(np.eye(rho_vec_dim(rho_vec)))
    P = np.outer(rho_vec, eye_vec)
    return solve(Ld + P, rhs)


def rho_vec_dim(rho_vec):
    return int(round(math.sqrt(rho_vec.size)))


def _dense_coherence(Ld, rho_mat, Lmat):
    D = Lmat.shape[0]
    rho_vec = vec(rho_mat)
    eye_vec = vec(np.eye(D))
    Qp = np.eye(D * D) - np.outer(rho_vec, eye_vec)
    v = vec(Lmat @ rho_mat)
    y = solve(Qp @ Ld @ Qp + np.outer(rho_vec, eye_vec), Qp @ v)
    return -2.0 * float(eye_vec @ vec(unvec(y, D) @ Lmat.conj().T))


def _dense_mandel_q(Ld, rho_mat, Lmat):
    D = Lmat.shape[0]
    rho_vec = vec(rho_mat)
    j_mat = Lmat @ rho_mat @ Lmat.conj().T
    F = float(np.trace(j_mat))
    chi = vec(j_mat - F * rho_mat)
    y = _dense_deflated_solve(Ld, rho_vec, chi)
    w_mat = unvec(y, D)
    return -2.0 / F * float(np.trace(Lmat @ w_mat @ Lmat.conj().T))


def _dense_g1(Ld, rho_mat, Lmat, times):
    D = Lmat.shape[0]
    F = float(np.trace(Lmat @ rho_mat @ Lmat.conj().T))
    out = []
    for s in times:
        w = unvec(expm(Ld * s) @ vec(Lmat @ rho_mat), D)
        out.append(float(np.trace(w @ Lmat.conj().T)) / F)
    return np.array(out)


def _dense_g2(Ld, rho_mat, Lmat, s, sp, tp, t):
    D = Lmat.shape[0]
    F = float(np.trace(Lmat @ rho_mat @ Lmat.conj().T))
    events = sorted([(float(s), 1), (float(sp), 1), (float(tp), 0), (float(t), 0)])
    w = rho_mat.copy()
    prev = events[0][0]
    for time, isdag in events:
        if time > prev:
            w = unvec(expm(Ld * (time - prev)) @ vec(w), D)
        prev = time
        w = (w @ Lmat.conj().T) if isdag else (Lmat @ w)
    return float(np.trace(w)) / F**2


@dataclass(frozen=True)
class OracleDraw:
    params: ModelParams
    diffs: dict
    passed: bool


@dataclass(frozen=True)
class OracleReport:
    seed: int
    tolerance: float
    draws: tuple
    passed: bool

    @property
    def first_failure(self):
        for d in self.draws:
            if not d.passed:
                return d
        return None


def _agree(a, b, tol):
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


def compare_band_vs_dense(params: ModelParams, rng, tol=1e-10, liou=None):
    """All observables through both routes; returns an OracleDraw."""
    ops = build_operators(params)
    if liou is None:
        liou = liouvillian_for(params)
    Ld = dense_oracle(ops, params)
    Lmat = loss_matrix(ops)

    rho_band = liou.steady_state_vector()  # raw kernels on both routes
    rho_dense = _dense_steady_state(Ld, params.dim)
    diffs = {"steady_state": float(np.abs(np.diag(rho_dense) - rho_band).max())}

    c_band = obs.coherence(liou)
    c_dense = _dense_coherence(Ld, rho_dense, Lmat)
    diffs["coherence"] = (c_band, c_dense)

    q_band = obs.mandel_q(liou)
    q_dense = _dense_mandel_q(Ld, rho_dense, Lmat)
    diffs["mandel_q"] = (q_band, q_dense)

    ell = 4.0 * obs.flux(liou, rho_band) / c_band
    times = np.array([0.1, 0.5, 2.0]) / ell
    g1_band = obs.g1_trace(liou, times).values
    g1_dense = _dense_g1(Ld, rho_dense, Lmat, times)
    diffs["g1"] = (tuple(g1_band), tuple(g1_dense))

    tuples = [tuple(rng.uniform(-2.0 / ell, 2.0 / ell, size=4)) for _ in range(2)]
    g2_band = [obs.g2_general(liou, *tp) for tp in tuples]
    g2_dense = [_dense_g2(Ld, rho_dense, Lmat, *tp) for tp in tuples]
    diffs["g2"] = (tuple(g2_band), tuple(g2_dense))

    ok = (diffs["steady_state"] <= tol
          and _agree(*diffs["coherence"], tol)
          and _agree(*diffs["mandel_q"], tol)
          and all(_agree(a, b, tol) for a, b in zip(g1_band, g1_dense))
          and all(_agree(a, b, tol) for a, b in zip(g2_band, g2_dense)))
    return OracleDraw(params=params, diffs=diffs, passed=ok)


def _random_params(rng):
    fam = [Family.P, Family.PLAMBDA, Family.PQ][int(rng.integers(3))]
    p = float(rng.uniform(1.5, 6.0))
    D = int(rng.integers(4, 13))
    lam = float(rng.uniform(0.0, 1.0)) if fam is Family.PLAMBDA else 0.0
    q = float(rng.uniform(-1.0, 0.0)) if fam is Family.PQ else 0.0
    return ModelParams(family=fam, p=p, dim=D, lam=lam, q=q)


def oracle_equivalence(seed=0, n_draws=20, tol=1e-10) -> OracleReport:
    """Seeded random models, all observables band-vs-dense within `tol`.

    The first three draws pin one model per family (including the maximally
    regular pump q = -1, which exercises the squared-gain band coupling);
    the rest are uniform over families and parameters, all with D <= 12.
    """
    rng = np.random.default_rng(seed)
    draws = [
        ModelParams(family=Family.P, p=float(rng.uniform(3.0, 5.0)),
                    dim=int(rng.integers(6, 13))),
        ModelParams(family=Family.PLAMBDA, p=float(rng.uniform(3.0, 5.0)),
                    dim=int(rng.integers(6, 13)), lam=float(rng.uniform(0.2, 0.8))),
        ModelParams(family=Family.PQ, p=float(rng.uniform(3.0, 5.0)),
                    dim=int(rng.integers(6, 13)), q=-1.0),
    ]
    while len(draws) < n_draws:
        draws.append(_random_params(rng))
    results = tuple(compare_band_vs_dense(p, rng, tol) for p in draws)
    return OracleReport(seed=seed, tolerance=tol, draws=results,
                        passed=all(d.passed for d in results))

"""Band-resolved Liouvillians, discrete-time Kraus sets and the dense oracle.

Every jump operator of the three families occupies a single off-diagonal of
the cavity matrix, so the Liouvillian never mixes matrix elements across
bands: writing k = column - row, the flattened D^2-dimensional superoperator
block-diagonalises into independent blocks of size D-|k|.  Band k couples
only the vector of elements {rho_{m,m+k}}.  This replaces dense D^2 x D^2
linear algebra by O(D) banded solves; :func:`dense_oracle` builds the full
flattened matrix (for small D) to cross-validate the decomposition.

Band-k blocks are tridiagonal for the Markovian families and acquire a
2-step lower coupling from the D[G]^2 regular-pumping term of the p,q
family.  Band -k is identical to band +k because all amplitudes are real.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.linalg import solve_banded

from .errors import (DegenerateKernel, DimensionTooLarge, GammaTooLarge,
                     InconsistentInputs, InvalidParams)
from .models import CavityOperators, Family, ModelParams, build_operators


@dataclass(frozen=True)
class BandBlock:
    """A small banded real matrix stored as offset diagonals.

    ``diags[o]`` holds M[i, i+o] for o >= 0 and M[i+|o|, i] for o < 0, with
    i running over the stored length n - |o|.  Offsets whose stored
    diagonal is empty (|o| >= n, possible for tiny blocks) are dropped.
    """

    n: int
    diags: dict

    def __post_init__(self):
        object.__setattr__(
            self, "diags",
            {o: np.asarray(v, dtype=float)
             for o, v in self.diags.items() if abs(o) < self.n and len(v)})

    def to_dense(self):
        m = np.zeros((self.n, self.n))
        for o, v in self.diags.items():
            m += np.diag(v, o)
        return m

    def to_sparse(self):
        return sp.diags([v for v in self.diags.values()],
                        list(self.diags.keys()), shape=(self.n, self.n), format="csc")

    def matvec(self, x):
        y = np.zeros_like(x, dtype=float)
        for o, v in self.diags.items():
            if o >= 0:
                y[: self.n - o] += v * x[o:]
            else:
                y[-o:] += v * x[: self.n + o]
        return y

    def diagonal(self):
        return self.diags.get(0, np.zeros(self.n))

    @property
    def lower(self):
        return max((-o for o in self.diags if o < 0), default=0)

    @property
    def upper(self):
        return max((o for o in self.diags if o > 0), default=0)

    def solve(self, rhs, refine=1):
        """Direct banded solve M x = rhs with `refine` steps of iterative refinement."""
        l, u = self.lower, self.upper
        ab = np.zeros((l + u + 1, self.n))
        for o, v in self.diags.items():
            if o >= 0:
                ab[u - o, o:] = v
            else:
                ab[u - o, : self.n + o] = v
        x = solve_banded((l, u), ab, rhs)
        for _ in range(refine):
            r = rhs - self.matvec(x)
            x = x + solve_banded((l, u), ab, r)
        return x

    def norm1(self):
        col = np.zeros(self.n)
        for o, v in self.diags.items():
            if o >= 0:
                col[o:] += np.abs(v)
            else:
                col[: self.n + o] += np.abs(v)
        return float(col.max())

    def residual(self, x, rhs):
        """Normwise backward error ||rhs - Mx|| / (||M|| ||x|| + ||rhs||)."""
        r = rhs - self.matvec(x)
        denom = self.norm1() * np.linalg.norm(x) + np.linalg.norm(rhs)
        return np.linalg.norm(r) / denom if denom > 0 else np.linalg.norm(r)


def _gain_band_parts(gain, gg, k, D):
    """Sub-diagonal and diagonal of the band-k block of D[G] (lower bidiagonal)."""
    n = D - k
    sub = gain[: n - 1] * gain[k : k + n - 1]
    diag = -0.5 * (gg[:n] + gg[k : k + n])
    return sub, diag


def _loss_band_parts(loss, ll, k, D):
    """Super-diagonal and diagonal of the band-k block of D[L] (upper bidiagonal)."""
    n = D - k
    sup = loss[: n - 1] * loss[k : k + n - 1]
    diag = -0.5 * (ll[:n] + ll[k : k + n])
    return sup, diag


def _square_lower_bidiagonal(sub, diag):
    """Square of a lower-bidiagonal matrix: offsets (-2, -1, 0)."""
    sub2 = sub[1:] * sub[:-1]
    sub1 = sub * (diag[:-1] + diag[1:])
    return sub2, sub1, diag * diag


def band_block(ops: CavityOperators, params: ModelParams, k: int) -> BandBlock:
    """Band-k block of the family Liouvillian (flux units, N = 1)."""
    D = ops.dim
    gg = ops.gain_sq_diag()
    ll = ops.loss_sq_diag()
    g_sub, g_diag = _gain_band_parts(ops.gain, gg, k, D)
    l_sup, l_diag = _loss_band_parts(ops.loss, ll, k, D)
    if params.family is Family.PQ:
        s2, s1, s0 = _square_lower_bidiagonal(g_sub, g_diag)
        half_q = params.q / 2.0
        diags = {
            -2: half_q * s2,
            -1: g_sub + half_q * s1,
            0: g_diag + half_q * s0 + l_diag,
            1: l_sup,
        }
    else:
        diags = {-1: g_sub, 0: g_diag + l_diag, 1: l_sup}
    return BandBlock(n=D - k, diags=diags)


class BandLiouvillian:
    """Family Liouvillian decomposed into per-band blocks.

    Immutable after construction; the steady state, flux and per-band
    propagators are cached on first use and safe for concurrent reads.
    """

    def __init__(self, ops: CavityOperators, params: ModelParams, max_band: int = 2):
        if ops.dim != params.dim:
            raise InconsistentInputs(
                f"operator dimension {ops.dim} != params.dim {params.dim}")
        if max_band < 0:
            raise InvalidParams("max_band must be >= 0")
        self.ops = ops
        self.params = params
        self.max_band = max_band
        self.blocks = {k: band_block(ops, params, k) for k in range(max_band + 1)}
        self._cache = {}

    @property
    def dim(self):
        return self.params.dim

    def block(self, k: int) -> BandBlock:
        """Band-|k| block; bands k and -k share it (real amplitudes)."""
        k = abs(k)
        if k not in self.blocks:
            self.blocks[k] = band_block(self.ops, self.params, k)
        return self.blocks[k]

    def steady_state_vector(self):
        """Kernel of the band-0 block, unit trace (cached, no clipping)."""
        if "ss" not in self._cache:
            self._cache["ss"] = band0_kernel(self)
        return self._cache["ss"]

    @property
    def flux(self):
        """Photon flux F = sum_n L_n^2 rho_n at the numerical steady state."""
        if "flux" not in self._cache:
            self._cache["flux"] = float(
                self.ops.loss_sq_diag() @ self.steady_state_vector())
        return self._cache["flux"]

    def propagator(self, k: int):
        """Cached exp(t * block(|k|)) action provider."""
        from .propagate import BandPropagator  # deferred: avoids import cycle

        k = abs(k)
        key = ("prop", k)
        if key not in self._cache:
            self._cache[key] = BandPropagator.for_block(self.block(k))
        return self._cache[key]


def build_liouvillian(ops: CavityOperators, params: ModelParams,
                      max_band: int = 2) -> BandLiouvillian:
    """Build the band-resolved Liouvillian for one model."""
    return BandLiouvillian(ops, params, max_band)


def liouvillian_for(params: ModelParams, max_band: int = 2) -> BandLiouvillian:
    """Convenience: operators + Liouvillian in one call."""
    return build_liouvillian(build_operators(params), params, max_band)


def band0_kernel(liou: BandLiouvillian) -> np.ndarray:
    """Unit-trace kernel vector of the band-0 block.

    Solved through the bordered system [[L0, e], [1^T, 0]] [x, s] = [0, 1]:
    the all-ones row is the exact left null vector of the trace-preserving
    block, which forces s = 0 and leaves L0 x = 0 with sum(x) = 1.  The
    bordering column e only needs a nonzero trace; the analytic profile is
    used.  Raises :class:`DegenerateKernel` when the bordered matrix is
    singular (the stationary mode is not unique).
    """
    b0 = liou.block(0)
    D = b0.n
    guess = liou.ops.rho
    A = sp.lil_matrix((D + 1, D + 1))
    A[:D, :D] = b0.to_sparse()
    A[:D, D] = guess.reshape(-1, 1)
    A[D, :D] = 1.0
    rhs = np.zeros(D + 1)
    rhs[D] = 1.0
    try:
        lu = spla.splu(A.tocsc())
        x = lu.solve(rhs)[:D]
    except RuntimeError as exc:  # singular factorisation
        raise DegenerateKernel(f"band-0 kernel solve failed: {exc}") from exc
    if not np.all(np.isfinite(x)):
        raise DegenerateKernel("band-0 kernel solve produced non-finite entries")
    return x


def band0_spectral_gap(liou: BandLiouvillian, k: int = 2):
    """Magnitudes of the k eigenvalues of the band-0 block closest to zero.

    Used to certify uniqueness of the stationary mode: the second value must
    sit well away from zero.  Deterministic (fixed ARPACK start vector).
    """
    b0 = liou.block(0)
    D = b0.n
    scale = float(np.abs(b0.diagonal()).max())
    if D <= 200:
        lam = np.linalg.eigvals(b0.to_dense())
        mags = np.sort(np.abs(lam))
        return mags[:k]
    sigma = -1e-8 * scale
    lam = spla.eigs(b0.to_sparse(), k=k, sigma=sigma, which="LM",
                    v0=liou.ops.rho, return_eigenvectors=False)
    return np.sort(np.abs(lam))


# ---------------------------------------------------------------------------
# discrete-time (iMPS) Kraus set


@dataclass(frozen=True)
class TransferSet:
    """Discrete-time Kraus operators A^[j] for one step gamma = N*dt.

    ``a_gain`` (= sqrt(gamma) G) sits on the raising band, ``a_loss``
    (= sqrt(gamma) L) on the lowering band, ``a_keep`` is the diagonal
    no-emission amplitude and the beam-noise operator A^[2] is identically
    zero.  Completeness sum_j A^dag A = I holds by construction.
    """

    gamma: float
    a_gain: np.ndarray
    a_keep: np.ndarray
    a_loss: np.ndarray

    @property
    def dim(self):
        return self.a_keep.size

    def isometry_defect(self):
        """max |sum_j (A^dag A)_nn - 1| over levels."""
        gg = np.append(self.a_gain**2, 0.0)
        ll = np.concatenate(([0.0], self.a_loss**2))
        return float(np.abs(gg + ll + self.a_keep**2 - 1.0).max())

    def band_block(self, k: int) -> BandBlock:
        """Band-k block of the transfer matrix T = sum_j A* (x) A."""
        k = abs(k)
        n = self.dim - k
        sub = self.a_gain[: n - 1] * self.a_gain[k : k + n - 1]
        sup = self.a_loss[: n - 1] * self.a_loss[k : k + n - 1]
        diag = self.a_keep[:n] * self.a_keep[k : k + n]
        return BandBlock(n=n, diags={-1: sub, 0: diag, 1: sup})


def build_transfer(ops: CavityOperators, gamma: float) -> TransferSet:
    """Kraus set at step gamma; raises GammaTooLarge when positivity fails."""
    if gamma < 0:
        raise InvalidParams("gamma must be >= 0")
    keep_sq = 1.0 - gamma * (ops.gain_sq_diag() + ops.loss_sq_diag())
    if keep_sq.min() < 0.0:
        raise GammaTooLarge(
            f"1 - gamma*(G^dag G + L^dag L) reaches {keep_sq.min():.3e}; "
            "the discretisation dt is too coarse")
    return TransferSet(gamma=gamma,
                       a_gain=np.sqrt(gamma) * ops.gain,
                       a_keep=np.sqrt(keep_sq),
                       a_loss=np.sqrt(gamma) * ops.loss)


# ---------------------------------------------------------------------------
# dense flattened-space oracle

DENSE_GUARD = 64


def gain_matrix(ops: CavityOperators):
    return np.diag(ops.gain, -1)


def loss_matrix(ops: CavityOperators):
    return np.diag(ops.loss, 1)


def dense_dissipator(c):
    """Flattened D[c] = c . c^dag - {c^dag c, .}/2 in column-stacking order."""
    D = c.shape[0]
    cd = c.conj().T
    cc = cd @ c
    return (np.kron(c.conj(), c)
            - 0.5 * np.kron(np.eye(D), cc)
            - 0.5 * np.kron(cc.T, np.eye(D)))


def dense_oracle(ops: CavityOperators, params: ModelParams) -> np.ndarray:
    """Full D^2 x D^2 flattened Liouvillian (guarded to D <= 64).

    Same arithmetic as the band decomposition in a different layout; used
    only for cross-validation.
    """
    D = ops.dim
    if D > DENSE_GUARD:
        raise DimensionTooLarge(f"dense oracle guarded to D <= {DENSE_GUARD}, got {D}")
    if D != params.dim:
        raise InconsistentInputs("operator dimension != params.dim")
    dG = dense_dissipator(gain_matrix(ops))
    dL = dense_dissipator(loss_matrix(ops))
    if params.family is Family.PQ:
        return dG + (params.q / 2.0) * (dG @ dG) + dL
    return dG + dL


def vec(m):
    """Column-stacking vectorisation (matches the kron convention above)."""
    return np.asarray(m).reshape(-1, order="F")


def unvec(v, D):
    return np.asarray(v).reshape(D, D, order="F")


def band_flat_indices(D, k):
    """Flat (column-stacking) indices of band k, ordered as the band vector."""
    if k >= 0:
        rows = np.arange(D - k)
        cols = rows + k
    else:
        cols = np.arange(D + k)
        rows = cols - k
    return cols * D + rows


# ---------------------------------------------------------------------------
# Frobenius-norm diagnostics for the regular-pumping approximations


@dataclass(frozen=True)
class PQNormRow:
    dim: int
    loss_norm: float          # || D[L] varrho ||_F
    gain_defect_norm: float   # || (Gcal - 1) varrho ||_F
    pi_top_norm: float        # || D[Pi_top] varrho ||_F
    generator_residual: float  # || L_NM rho_ss ||_F at the analytic profile


def pq_norm_diagnostics(params: ModelParams, d_list):
    """Frobenius norms probing the regular-pumping approximations.

    For each D the norms are evaluated on the pure phase state
    varrho = |psi><psi|, psi_n = sqrt(rho_n), whose uniform phase mixture
    reproduces the incoherent steady state.  Gcal is the gain map
    G . G^dag + Pi_top . Pi_top.  Frobenius norm is the standard
    (Tr[A^dag A])^(1/2).
    """
    if params.family is not Family.PQ:
        raise InvalidParams("pq_norm_diagnostics is defined for the p,q family only")
    rows = []
    for D in d_list:
        pd = ModelParams(family=params.family, p=params.p, dim=int(D),
                         lam=params.lam, q=params.q)
        ops = build_operators(pd)
        psi = np.sqrt(ops.rho)
        varrho = np.outer(psi, psi)
        G = gain_matrix(ops)
        L = loss_matrix(ops)
        dl = L @ varrho @ L.T - 0.5 * (L.T @ L @ varrho + varrho @ L.T @ L)
        gv = G @ varrho @ G.T
        gv[-1, -1] += varrho[-1, -1]  # Pi_top varrho Pi_top
        gdef = gv - varrho
        dpi = np.zeros_like(varrho)
        dpi[-1, :] -= 0.5 * varrho[-1, :]
        dpi[:, -1] -= 0.5 * varrho[:, -1]
        dpi[-1, -1] += varrho[-1, -1]
        resid = band_block(ops, pd, 0).matvec(ops.rho)
        rows.append(PQNormRow(dim=int(D),
                              loss_norm=float(np.linalg.norm(dl)),
                              gain_defect_norm=float(np.linalg.norm(gdef)),
                              pi_top_norm=float(np.linalg.norm(dpi)),
                              generator_residual=float(np.linalg.norm(resid))))
    return rows

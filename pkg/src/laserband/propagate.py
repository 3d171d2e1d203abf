"""Matrix-exponential actions exp(t*M) v for band blocks.

Two strategies, selected per block:

* Tridiagonal blocks with strictly positive off-diagonal pairs (both
  Markovian families) are symmetrised by a diagonal similarity and
  diagonalised once with `eigh_tridiagonal`; actions at any t are then exact
  to round-off and O(D^2).

* The p,q blocks carry a one-sided 2-step coupling and are severely
  non-normal (eigenvector condition numbers ~1e16), so diagonalisation is
  useless.  Instead a dyadic ladder of squared Pade exponentials
  E_j = exp(M * delta * 2^j) is cached (delta chosen so ||M*delta||_1 = 1/2)
  and an action at arbitrary t is the binary expansion of t/delta applied to
  the vector, with the sub-delta remainder summed as a Taylor series.  The
  ladder norms stay O(1) for these generators, so errors do not amplify
  through the squarings.

Error contract for both paths: ||computed - exact|| <= ~1e-10 ||v||.
"""

import numpy as np
from scipy.linalg import eigh_tridiagonal, expm

from .errors import ExpmTolFailure

_TAYLOR_TOL = 1e-16
_MAX_LADDER = 64


class BandPropagator:
    @staticmethod
    def for_block(block):
        offs = set(block.diags.keys())
        if offs <= {-1, 0, 1}:
            sub = block.diags.get(-1)
            sup = block.diags.get(1)
            if (sub is not None and sup is not None
                    and np.all(sub > 0) and np.all(sup > 0)):
                return SymmetrizedTridiagPropagator(block)
        return DyadicPropagator(block)


class SymmetrizedTridiagPropagator:
    """exp(tM)v for tridiagonal M with positive off-diagonal products.

    M = Dinv S D with S symmetric tridiagonal; the similarity scale is
    accumulated in log space so extreme steady-state ratios cannot overflow.
    """

    def __init__(self, block):
        d = block.diags[0]
        sub = block.diags[-1]
        sup = block.diags[1]
        logd = np.concatenate(([0.0], 0.5 * np.cumsum(np.log(sup) - np.log(sub))))
        logd -= logd.max()
        self.scale = np.exp(logd)
        lam, U = eigh_tridiagonal(d, np.sqrt(sup * sub))
        self.lam = lam
        self.U = U
        self.n = block.n

    def act(self, v, t):
        if t == 0:
            return np.array(v, dtype=float)
        z = self.U.T @ (self.scale * v)
        return (self.U @ (np.exp(self.lam * t) * z)) / self.scale

    def act_many(self, v, times):
        z = self.U.T @ (self.scale * v)
        out = (self.U @ (np.exp(np.outer(self.lam, np.asarray(times, dtype=float))) * z[:, None]))
        return (out / self.scale[:, None]).T


class DyadicPropagator:
    """exp(tM)v via a cached ladder of dyadically squared exponentials."""

    def __init__(self, block):
        self.block = block
        self.n = block.n
        nrm = self._norm1()
        self.delta = 0.5 / nrm if nrm > 0 else 1.0
        self._ladder = [expm(block.to_dense() * self.delta)]

    def _norm1(self):
        m = np.zeros(self.n)
        for o, v in self.block.diags.items():
            if o >= 0:
                m[o:] += np.abs(v)
            else:
                m[: self.n + o] += np.abs(v)
        return float(m.max())

    def _power(self, j):
        if j >= _MAX_LADDER:
            raise ExpmTolFailure(
                f"requested horizon needs 2^{j} * delta; ladder capped at 2^{_MAX_LADDER}")
        while len(self._ladder) <= j:
            top = self._ladder[-1]
            self._ladder.append(top @ top)
        return self._ladder[j]

    def _taylor_remainder(self, w, r):
        # ||M r||_1 <= 1/2, so plain Taylor summation converges to round-off
        acc = w.copy()
        term = w.copy()
        ref = np.linalg.norm(acc)
        for k in range(1, 60):
            term = (r / k) * self.block.matvec(term)
            acc += term
            if np.linalg.norm(term) <= _TAYLOR_TOL * max(ref, np.linalg.norm(acc)):
                return acc
        raise ExpmTolFailure("Taylor remainder failed to converge below tolerance")

    def act(self, v, t):
        if t < 0:
            raise ExpmTolFailure("propagation times must be >= 0")
        w = np.array(v, dtype=float)
        if t == 0:
            return w
        steps = int(t / self.delta)
        r = t - steps * self.delta
        j = 0
        while steps:
            if steps & 1:
                w = self._power(j) @ w
            steps >>= 1
            j += 1
        if r > 0:
            w = self._taylor_remainder(w, r)
        return w

    def act_many(self, v, times):
        return np.stack([self.act(v, t) for t in times])

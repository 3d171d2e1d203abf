"""Laser families: gain/loss matrix elements and analytic steady states.

The laser cavity is a ``D``-level system with number basis ``|0> .. |D-1>``.
Three families are implemented, all sharing the steady-state profile

    rho_n = alpha * sin(pi (n+1) / (D+1)) ** p ,      n = 0 .. D-1,

and distinguished by how the raising (gain) and lowering (loss) amplitudes
split the detailed-balance ratio between them:

* ``Family.P``        -- flat gain (G_n = 1), loss carries the full ratio.
* ``Family.PLAMBDA``  -- gain exponent ``p*lam/2``, loss ``p*(1-lam)/2``;
  ``lam = 0.5`` makes gain and loss exact reciprocals.
* ``Family.PQ``       -- flat gain plus a regular-pumping correction term in
  the master equation; loss exponent ``p*(1+q/2)/2`` keeps the same steady
  state.  ``q`` is the Mandel-Q parameter of the pump, ``q in [-1, 0]``.

Amplitudes are dimensionless with proportionality constants fixed to 1, so
the steady-state photon flux equals 1 up to an O(rho_edge) boundary term.
Time is measured in units of the flux.  All constructors are pure functions;
the returned containers are immutable and safe to share across workers.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import gammaln

from .errors import InvalidParams


class Family(str, Enum):
    P = "p"
    PLAMBDA = "plambda"
    PQ = "pq"


@dataclass(frozen=True)
class ModelParams:
    """One laser model: family tag plus (p, lam, q, dim).

    Parameters
    ----------
    family : Family or str
        One of ``"p"``, ``"plambda"``, ``"pq"``.
    p : float
        Sharpness of the sin^p cavity distribution, ``p > 0``.  Values
        ``p <= 3`` are accepted but lie outside the Heisenberg-limited
        regime; see :meth:`regime_notes`.
    dim : int
        Cavity levels ``D >= 3``.
    lam : float
        Gain/loss split for the p,lambda family.  Canonical range [0, 1]
        (0 = flat gain, 1 = flat loss); other reals are accepted.
    q : float
        Pump Mandel-Q for the p,q family, ``-1 <= q <= 0``.  ``q = -1`` is
        the perfectly regular pump; the loss exponent parameter
        ``x = -q/2`` then sits at the boundary value 1/2.
    """

    family: Family
    p: float
    dim: int
    lam: float = 0.0
    q: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        if not (self.p > 0.0 and np.isfinite(self.p)):
            raise InvalidParams(f"p must be positive and finite, got {self.p}")
        if int(self.dim) != self.dim or self.dim < 3:
            raise InvalidParams(f"dim must be an integer >= 3, got {self.dim}")
        object.__setattr__(self, "dim", int(self.dim))
        if not np.isfinite(self.lam):
            raise InvalidParams(f"lam must be finite, got {self.lam}")
        if self.family is Family.PQ and not (-1.0 <= self.q <= 0.0):
            raise InvalidParams(f"q must lie in [-1, 0] for the p,q family, got {self.q}")

    @property
    def mu(self):
        """Mean stored excitation number, exactly (D-1)/2."""
        return (self.dim - 1) / 2.0

    @property
    def x_gain(self):
        return self.lam if self.family is Family.PLAMBDA else 0.0

    @property
    def x_loss(self):
        if self.family is Family.PLAMBDA:
            return self.lam
        if self.family is Family.PQ:
            return -self.q / 2.0
        return 0.0

    def regime_notes(self):
        """Advisory flags for parameter choices outside the optimal-coherence regime."""
        notes = []
        if self.p <= 3.0:
            notes.append("p <= 3: outside the Heisenberg-limited regime (coherence ~ mu^(p+1))")
        elif self.p < 3.2:
            notes.append("p in the crossover band (2.8, 3.2): fitted exponents transition smoothly")
        if self.family is Family.PLAMBDA and not (0.0 <= self.lam <= 1.0):
            notes.append("lambda outside [0, 1]: outside the canonical gain/loss interpolation")
        if self.dim < 20:
            notes.append("dim is small: asymptotic (D -> infinity) formulas not applicable")
        return tuple(notes)


@dataclass(frozen=True)
class CavityOperators:
    """Band amplitudes and analytic steady state of one model.

    ``gain[i]`` is the amplitude <i+1|G|i> and ``loss[i]`` the amplitude
    <i|L|i+1>, for i = 0 .. D-2 (both strictly positive).  ``rho`` is the
    analytic steady-state weight vector of length D and ``alpha`` its
    normalisation constant.
    """

    gain: np.ndarray
    loss: np.ndarray
    rho: np.ndarray
    alpha: float

    @property
    def dim(self):
        return self.rho.size

    def gain_sq_diag(self):
        """Diagonal of G^dag G: entry n is G_{n+1}^2, zero at the top level."""
        return np.append(self.gain**2, 0.0)

    def loss_sq_diag(self):
        """Diagonal of L^dag L: entry n is L_n^2, zero at the ground level."""
        return np.concatenate(([0.0], self.loss**2))


def _sin_profile(p, dim):
    # s[n] = sin(pi (n+1) / (D+1)), evaluated directly so the edge ratios
    # stay accurate to a few ulp
    return np.sin(np.pi * np.arange(1, dim + 1) / (dim + 1))


def build_operators(params: ModelParams) -> CavityOperators:
    """Construct gain/loss band amplitudes and the analytic steady state.

    The amplitudes follow the number-basis matrix elements

        G_n = (s_{n+1}/s_n)^(p*x_gain/2),   L_n = (s_n/s_{n+1})^(p*(1-x_loss)/2)

    with s_n = sin(pi n / (D+1)), n = 1 .. D-1, and proportionality
    constants set to 1.  Detailed balance G_n^2 rho_{n-1} = L_n^2 rho_n then
    reproduces the sin^p steady state exactly for the Markovian families.
    """
    D = params.dim
    s = _sin_profile(params.p, D)
    w = s**params.p
    alpha = 1.0 / w.sum()
    rho = alpha * w
    ratio = s[1:] / s[:-1]  # s_{n+1}/s_n for n = 1 .. D-1
    gain = ratio ** (params.p * params.x_gain / 2.0)
    loss = ratio ** (-params.p * (1.0 - params.x_loss) / 2.0)
    return CavityOperators(gain=gain, loss=loss, rho=rho, alpha=alpha)


def analytic_steady_state(params: ModelParams) -> np.ndarray:
    """Steady-state weights rho_n = alpha sin^p(pi(n+1)/(D+1)), unit sum."""
    s = _sin_profile(params.p, params.dim)
    w = s**params.p
    return w / w.sum()


def alpha_limit(p):
    """Asymptotic normalisation: lim_{D->inf} D*alpha = sqrt(pi) Gamma((2+p)/2) / Gamma((1+p)/2)."""
    return np.sqrt(np.pi) * np.exp(gammaln((2.0 + p) / 2.0) - gammaln((1.0 + p) / 2.0))


def mean_excitation(params: ModelParams):
    """Mean photon number of the steady state, exactly (D-1)/2 by sin symmetry."""
    return params.mu

"""laserband: banded-superoperator numerics for Heisenberg-limited laser models.

Quick start::

    from laserband import ModelParams, liouvillian_for, compute_observables

    params = ModelParams(family="plambda", p=4.1479, dim=300, lam=0.5)
    obs = compute_observables(liouvillian_for(params))
    print(obs.coherence, obs.mandel_q)
"""

from .errors import (AsymptoticWindowViolated, DegenerateKernel,
                     DimensionTooLarge, ExpmTolFailure, GammaTooLarge,
                     HorizonTooShort, InconsistentInputs, InsufficientSamples,
                     InvalidParams, LaserbandError, OptimizerStall,
                     OutOfDomain, SingularBandOne)
from .models import (CavityOperators, Family, ModelParams, alpha_limit,
                     analytic_steady_state, build_operators, mean_excitation)
from .superop import (BandBlock, BandLiouvillian, TransferSet, band_block,
                      build_liouvillian, build_transfer, dense_oracle,
                      liouvillian_for, pq_norm_diagnostics)
from .observables import (BeamObservables, CorrelationTrace, coherence,
                          compute_observables, flux, g1_trace, g2_general,
                          g2_ps_trace, mandel_q, mandel_q_discrete,
                          mandel_q_from_g2, mandel_q_gamma_extrapolated,
                          steady_state)
from .analytics import (IdealBeam, coherence_formula, coherence_prefactor,
                        family_divisor, fn_elements, heisenberg_bound,
                        ideal_g1, ideal_g2, linewidth_ansatz,
                        measurement_window, mse_minimizing_window, optimal_p,
                        retrofiltering_mse_bruteforce, retrofiltering_mse_ideal)
from .verify import (DeviationReport, PowerLawFit, condition4_g1,
                     condition4_g2, fit_power_law, oracle_equivalence,
                     regime_scan)

__version__ = "0.1.0"

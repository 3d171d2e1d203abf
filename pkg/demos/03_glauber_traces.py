"""First- and second-order Glauber functions against the ideal beam.

g1 of the flat-gain family hugs exp(-ell |t|/2) over many coherence times;
the sub-Poissonian families deviate only at very short delays, where the
antibunching dip 1 - g2_ps(0) ~ C^{-1/2} lives.  The intensity correlation
time is ~sqrt(C), a factor mu^2 shorter than the phase coherence time.
"""

import numpy as np

from laserband import (IdealBeam, ModelParams, compute_observables, g1_trace,
                       g2_ps_trace, ideal_g1, liouvillian_for)

params = ModelParams(family="plambda", p=4.15, dim=300, lam=0.5)
liou = liouvillian_for(params)
o = compute_observables(liou)
beam = IdealBeam.from_observables(o)
print(f"model: lam family, D=300  ->  C = {o.coherence:.4g}, "
      f"ell = {o.linewidth:.4g}, Q = {o.mandel_q:.4f}")

times = np.linspace(0.0, 10.0 / o.linewidth, 9)
tr = g1_trace(liou, times)
print("\n   t*ell      g1(t)      ideal")
for t, v in zip(tr.times, tr.values):
    print(f"{t * o.linewidth:8.3f} {v:11.6f} {float(ideal_g1(beam, t)):11.6f}")

tc = np.sqrt(o.coherence)
times2 = np.concatenate([[0.0], np.geomspace(0.01, 30.0, 8)]) * tc
tr2 = g2_ps_trace(liou, times2)
print("\n   t/sqrt(C)  g2_ps(t)    (ideal beam: 1 at all delays)")
for t, v in zip(tr2.times, tr2.values):
    print(f"{t / tc:10.3f} {v:11.8f}")
print(f"\nantibunching dip * sqrt(C): {(1 - tr2.values[0]) * tc:.3f}")

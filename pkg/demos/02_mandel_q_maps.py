"""Mandel-Q of the beam across the family parameter spaces.

For the lam-parameterized family, Q dips to -0.5 at lam = 0.5 independently
of p; for the regular-pump family the beam Q mirrors the pump Mandel-q all
the way down to complete noise reduction at q = -1.  Coherence is maximized
at exactly the parameters that minimize Q: a win-win, not a trade-off.
"""

import numpy as np

from laserband import ModelParams, compute_observables, liouvillian_for

D = 200

print("lam family at p = 4.1479, D =", D)
print(f"{'lam':>6} {'Q':>10} {'coherence':>14}")
for lam in np.linspace(0.0, 1.0, 11):
    o = compute_observables(liouvillian_for(
        ModelParams(family="plambda", p=4.1479, dim=D, lam=float(lam))))
    print(f"{lam:6.2f} {o.mandel_q:10.4f} {o.coherence:14.5g}")

print("\npump statistics family at p = 4.1479, D =", D)
print(f"{'q':>6} {'Q':>10} {'coherence':>14}")
for q in np.linspace(0.0, -1.0, 11):
    o = compute_observables(liouvillian_for(
        ModelParams(family="pq", p=4.1479, dim=D, q=float(q))))
    print(f"{q:6.2f} {o.mandel_q:10.4f} {o.coherence:14.5g}")

print("\nQ is independent of p along the lam = 0.5 line:")
for p in (2.0, 3.0, 4.0, 5.0, 6.0):
    o = compute_observables(liouvillian_for(
        ModelParams(family="plambda", p=p, dim=D, lam=0.5)))
    print(f"   p={p}: Q = {o.mandel_q:.5f}")

"""The shallow-water limit: the full model against Saint-Venant as mu -> 0.

A hump of water runs over a submerged bump.  For each mu the full model and
the nonlinear shallow-water equations start from the same data; their
difference at T = 1 should shrink like mu.

Run: python3 demos/04_shallow_water_limit.py
"""

import math

import numpy as np

from capwaves import DimensionlessParams, Grid
from capwaves.evolution import SurfaceState
from capwaves.swlimit import convergence_study, flat_velocity_defect

g = Grid(64)
x = g.x
b = 0.5 * np.exp(-(x - 2.0) ** 2)
init = SurfaceState(np.exp(-2 * (x - math.pi) ** 2), np.zeros(g.shape))
p = DimensionlessParams(eps=0.1, mu=1e-2, beta=1.0)

study = convergence_study(init, b, p, [1e-2, 1e-3, 1e-4], g, T=1.0, dt=0.01)
print("   mu      |zeta - zeta_SW|  |V - V_SW|   divergence identity")
for r in study.rows:
    print(f"   {r.mu:<7g} {r.error_zeta:.3e}        {r.error_V:.3e}    {r.identity_max:.1e}")
print(f"fitted order in mu: {study.order:.2f}")

print("\nOn a flat bottom the gap between grad psi and the depth-mean velocity is")
print("|1 - tanh(sqrt(mu) k)/(sqrt(mu) k)| per mode, about mu k^2 / 3:")
for mu in (1e-2, 1e-3, 1e-4):
    print(f"   mu = {mu:<7g} k = 4: {flat_velocity_defect(4, mu):.3e}  (mu k^2/3 = {mu * 16 / 3:.3e})")

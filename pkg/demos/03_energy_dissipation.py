"""
Energy balance
==============

The surface energy ``E = 1/2 int (h_x**2 + s-/(m s+) f_x**2)`` decreases along
the flow, and its loss rate is the dissipation ``D``, a sum of squares plus the
shear-thinning term. We check both statements on a strongly perturbed film
with a shear-thinning upper layer.
"""

import math

import numpy as np

from ellisfilm.grid import Grid, State
from ellisfilm.rheology import FluidParams
from ellisfilm.stepper import StepConfig, advance

params = FluidParams(m=0.5, s_plus=1.0, s_minus=2.0, mu0_plus=1.0, tau_half=0.2, p=1.6)
grid = Grid(1.0, 128)
x = grid.x
state = State(0.0, 1 + 0.3 * np.cos(np.pi * x), 0.8 - 0.2 * np.cos(3 * np.pi * x), grid)

config = StepConfig(dt0=1e-6, dt_max=1e-4)
outcome, records = advance(state, 0.02, config, params, grid)

e = np.array([r.energy for r in records])
dissipated = math.fsum(r.dt * r.dissipation for r in records[1:])
print(f"steps: {len(records) - 1}, final status: {outcome.status.value}")
print(f"E(0) = {e[0]:.6e}, E(T) = {e[-1]:.6e}, sum dt*D = {dissipated:.6e}")
print(f"balance error (E(T) + sum dt*D - E(0)) / E(0) = {(e[-1] + dissipated - e[0]) / e[0]:.2e}")
print(f"energy ever increased: {bool(np.any(np.diff(e) > 0))}")
for r in records[:: max(1, len(records) // 8)]:
    print(f"  t = {r.t:9.3e}  E = {r.energy:.4e}  D = {r.dissipation:.4e}  min f = {r.min_f:.4f}  min g = {r.min_g:.4f}")

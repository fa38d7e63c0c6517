"""
Ellis rheology and the two ways of computing fluxes
===================================================

The upper fluid is an Ellis fluid: its inverse viscosity grows with the shear
stress as ``1/mu = (1/mu0) (1 + |sigma/tau_half|**(p-1))``. The lower fluid is
Newtonian. Integrating the lubrication velocity profiles gives closed-form
fluxes; the same fluxes can be computed from the shear-rate functions alone by
quadrature. This script compares the two.
"""

import numpy as np

from ellisfilm.lubrication import ellis_closure, flux_lower_general, flux_upper_general
from ellisfilm.model import flux_pair, mobilities
from ellisfilm.rheology import FluidParams, ellis_psi, invert_stress_law

# shear rate produced by a range of stresses, for a few flow-behaviour exponents
sigma = np.array([0.1, 0.5, 1.0, 2.0, 5.0])
print("shear rate psi(sigma), mu0 = tau_half = 1")
for p in (1.0, 1.5, 2.0, 3.0):
    print(f"  p = {p:3.1f}:", np.array2string(ellis_psi(sigma, 1.0, 1.0, p), precision=4))

# the Ellis law is explicit in the stress; a power-law fluid is explicit in the
# rate and has to be inverted numerically
power_law = lambda rate: rate ** (0.5 - 1.0) if rate > 0 else 1.0  # noqa: E731
print("\npower law n = 1/2, rate for stress 3:", invert_stress_law(power_law, 3.0), "(exact 9)")

# closed form versus quadrature at one state
params = FluidParams(m=0.8, s_plus=1.2, s_minus=0.9, mu0_plus=1.0, tau_half=0.5, p=2.5)
f, g, f3, h3 = 1.3, 0.7, -2.0, 3.5
j_f, j_h = flux_pair(f, g, f3, h3, params)
closure = ellis_closure(params)
lower = flux_lower_general(f, g, f3, h3, params, closure)
upper = flux_upper_general(f, g, f3, h3, params, closure)
print("\nmobilities p11, p12, p21, p22:", np.round(mobilities(f, g, params), 5))
print(f"lower flux:  closed form {j_f:.15g}  quadrature {lower:.15g}")
print(f"upper flux:  closed form {j_h - j_f:.15g}  quadrature {upper:.15g}")

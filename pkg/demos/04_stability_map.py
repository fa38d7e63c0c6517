"""
Decay rates across parameters
=============================

The slowest decay rate of a flat film depends on the layer thicknesses and the
fluid constants only through the linearised coefficient matrix. Here we tabulate
``kappa_pred`` over the two thicknesses, and show how the shear-thinning term
enters only at p = 1 (for p > 1 the flat state has zero shear).
"""

import numpy as np

from ellisfilm.rheology import FluidParams
from ellisfilm.stability import ellipticity_constant, stability_report

params = FluidParams()
thicknesses = [0.25, 0.5, 1.0, 2.0]
print("kappa_pred (L = 1); rows f*, columns g*")
print("        " + "".join(f"{g:>10.2f}" for g in thicknesses))
for f in thicknesses:
    row = [stability_report(f, g, params, 1.0).kappa_pred for g in thicknesses]
    print(f"{f:8.2f}" + "".join(f"{k:10.4f}" for k in row))

print("\nflow-behaviour exponent at f* = g* = 1:")
for p in (1.0, 1.5, 2.0, 3.0):
    rep = stability_report(1.0, 1.0, FluidParams(p=p), 1.0)
    print(f"  p = {p:3.1f}: lambda = ({rep.lambda_minus:.5f}, {rep.lambda_plus:.5f}), kappa = {rep.kappa_pred:.4f}")

print("\nmode rates (n, slow, fast) at the unit state:")
for n, slow, fast in stability_report(1.0, 1.0, params, 1.0, n_modes=4).mode_rates:
    print(f"  {n}: {slow:12.4f} {fast:14.4f}")

print("\nellipticity constant on a thickness grid:")
f, g = np.meshgrid(thicknesses, thicknesses, indexing="ij")
print(np.array2string(ellipticity_constant(f, g, params), precision=5))

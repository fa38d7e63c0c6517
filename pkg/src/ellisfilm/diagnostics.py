"""Scalar functionals of film states: mass, energy, dissipation, decay fits.

The discrete energy uses one-sided differences on cell faces,

    E = 1/2 sum_faces dx * ((dh/dx)**2 + s-/(m s+) * (df/dx)**2),

and the dissipation is the matching face sum of the sum-of-squares integrand.
For the conservative spatial operator in :mod:`ellisfilm.stepper` this pair
satisfies ``dE/dt = -D`` exactly at the semi-discrete level.
"""

import math
from dataclasses import asdict, dataclass

import numpy as np

from .grid import d2, face_average, integrate
from .rheology import c_p

__all__ = [
    "DiagnosticsRecord",
    "energy",
    "dissipation",
    "relative_energy",
    "perturbation_norm",
    "record",
    "fit_decay_rate",
]


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    mass_f: float
    mass_g: float
    energy: float
    dissipation: float
    min_f: float
    min_g: float
    perturbation_norm: float
    dt: float = 0.0

    def as_dict(self):
        return asdict(self)


def _dirichlet(f, h, ratio, grid):
    df = np.diff(f) / grid.dx
    dh = np.diff(h) / grid.dx
    return 0.5 * grid.dx * math.fsum(dh * dh + ratio * df * df)


def energy(state, params, grid):
    """Surface energy of the two interfaces (excess over the flat film)."""
    return _dirichlet(state.f, state.f + state.g, params.surface_ratio, grid)


def _sum_of_squares(f, g, a, c, params):
    # a = f_xxx, c = (f + g)_xxx; three nonnegative pieces of the dissipation integrand
    ms = params.m * params.s_plus
    mixed = params.s_minus * a + ms * c
    return (
        f * (f * mixed / (2.0 * math.sqrt(ms)) + math.sqrt(ms) * g * c) ** 2
        + f**3 * mixed**2 / (12.0 * ms)
        + params.s_plus / (3.0 * params.mu0_plus) * g**3 * c**2
    )


def dissipation(state, params, grid):
    """Energy dissipation rate, evaluated termwise nonnegative.

    On each face the Newtonian part is the mean of the sum-of-squares form at
    the two neighbouring nodes (face third derivatives, nodal heights). The
    shear-thinning part uses the face mean of ``|g|**(p+2)``.
    """
    f, g = state.f, state.g
    f3 = np.diff(d2(f, grid)) / grid.dx
    h3 = np.diff(d2(f + g, grid)) / grid.dx
    left = _sum_of_squares(f[:-1], g[:-1], f3, h3, params)
    right = _sum_of_squares(f[1:], g[1:], f3, h3, params)
    thinning = c_p(params) * face_average(np.abs(g) ** (params.p + 2.0)) * np.abs(h3) ** (params.p + 1.0)
    return grid.dx * math.fsum(0.5 * (left + right) + thinning)


def relative_energy(a, b, params, grid):
    """Energy of the difference of two states on the same grid; symmetric in (a, b)."""
    if a.f.shape != b.f.shape or (a.grid is not None and b.grid is not None and a.grid != b.grid):
        raise ValueError("relative energy needs two states on the same grid")
    df = b.f - a.f
    dh = (b.f + b.g) - (a.f + a.g)
    return _dirichlet(df, dh, params.surface_ratio, grid)


def perturbation_norm(state, grid):
    """L2 distance of (f, g) from their spatial averages."""
    fbar = integrate(state.f, grid) / grid.length
    gbar = integrate(state.g, grid) / grid.length
    return math.sqrt(max(integrate((state.f - fbar) ** 2 + (state.g - gbar) ** 2, grid), 0.0))


def record(state, params, grid, dt=0.0):
    return DiagnosticsRecord(
        t=float(state.t),
        mass_f=integrate(state.f, grid),
        mass_g=integrate(state.g, grid),
        energy=energy(state, params, grid),
        dissipation=dissipation(state, params, grid),
        min_f=float(np.min(state.f)),
        min_g=float(np.min(state.g)),
        perturbation_norm=perturbation_norm(state, grid),
        dt=float(dt),
    )


def fit_decay_rate(times, norms=None):
    """Least-squares slope of ``log(norm)`` against time.

    Accepts either two sequences or a single sequence of ``(t, norm)`` pairs.
    Returns ``(rate, r_squared)``; a decaying series has a negative rate.
    """
    if norms is None:
        pairs = np.asarray(times, dtype=float).reshape(-1, 2)
        times, norms = pairs[:, 0], pairs[:, 1]
    t = np.asarray(times, dtype=float)
    y = np.asarray(norms, dtype=float)
    if t.size < 10 or t.size != y.size:
        raise ValueError("need at least 10 (t, norm) samples")
    if np.any(y <= 0) or not np.all(np.isfinite(y)):
        raise ValueError("norms must be positive and finite")
    logy = np.log(y)
    tc = t - t.mean()
    slope = np.dot(tc, logy - logy.mean()) / np.dot(tc, tc)
    resid = logy - logy.mean() - slope * tc
    ss_tot = np.dot(logy - logy.mean(), logy - logy.mean())
    ss_res = np.dot(resid, resid)
    r_squared = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return float(slope), float(r_squared)

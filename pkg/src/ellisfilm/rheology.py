"""Constitutive laws for the two-layer film.

The lower layer is Newtonian, the upper layer follows the Ellis law

    1/mu = (1/mu0) * (1 + |stress / tau_half|**(p - 1)),

which is Newtonian at small stress and power-law-like at large stress.
Everything here is a pure function of its inputs.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

__all__ = [
    "FluidParams",
    "NonMonotoneLawError",
    "phi",
    "phi_prime",
    "c_p",
    "ellis_psi",
    "invert_stress_law",
]


class NonMonotoneLawError(ValueError):
    """Raised when a stress law s -> mu(|s|) s is not increasing."""


@dataclass(frozen=True)
class FluidParams:
    """Dimensionless constants of the Ellis-on-Newtonian system.

    Parameters
    ----------
    m : float
        Viscosity ratio mu0+ / mu0-.
    s_plus, s_minus : float
        Surface tension of the upper (air) and lower (fluid-fluid) interface.
    mu0_plus : float
        Zero-shear viscosity of the upper fluid.
    tau_half : float
        Shear stress at which the Ellis viscosity halves. ``math.inf`` gives a
        Newtonian upper fluid for p > 1.
    p : float
        Flow-behaviour exponent, p >= 1.
    tau : float
        Time-scale ratio; only the general-closure fluxes use it.
    """

    m: float = 1.0
    s_plus: float = 1.0
    s_minus: float = 1.0
    mu0_plus: float = 1.0
    tau_half: float = 1.0
    p: float = 2.0
    tau: float = 1.0

    def __post_init__(self):
        for name in ("m", "s_plus", "s_minus", "mu0_plus", "tau"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be positive and finite, got {value!r}")
        if not self.tau_half > 0 or math.isnan(self.tau_half):
            raise ValueError(f"tau_half must be positive (inf allowed), got {self.tau_half!r}")
        if not (math.isfinite(self.p) and self.p >= 1):
            raise ValueError(f"p must be >= 1, got {self.p!r}")

    @property
    def c_p(self):
        return c_p(self)

    @property
    def surface_ratio(self):
        """s- / (m s+), the weight of the lower interface in the energy."""
        return self.s_minus / (self.m * self.s_plus)


def phi(d, p):
    """Odd power map |d|**(p-1) * d."""
    d = np.asarray(d, dtype=float)
    out = np.abs(d) ** (p - 1.0) * d
    return out if out.ndim else float(out)


def phi_prime(d, p):
    """Derivative p |d|**(p-1) of :func:`phi`.

    At d = 0 this is 0 for p > 1 and 1 for p = 1 (numpy's 0**0 == 1 gives
    both cases without a branch).
    """
    d = np.asarray(d, dtype=float)
    out = p * np.abs(d) ** (p - 1.0)
    return out if out.ndim else float(out)


def c_p(params):
    """Prefactor of the shear-thinning flux term.

    ``C_p = s+**p / ((p + 2) mu0+ tau_half**(p - 1))``; zero for an infinite
    ``tau_half`` when p > 1, and s+/(3 mu0+) at p = 1 whatever ``tau_half`` is.
    """
    p = params.p
    return abs(params.s_plus) ** p / ((p + 2.0) * params.mu0_plus * abs(params.tau_half) ** (p - 1.0))


def ellis_psi(sigma, mu0, tau_half, p):
    """Shear rate produced by shear stress `sigma` in an Ellis fluid.

    Since the Ellis law is explicit in the stress, the inverse of
    ``s -> mu(|s|) s`` is available in closed form:
    ``psi(sigma) = (sigma / mu0) * (1 + |sigma / tau_half|**(p - 1))``.
    """
    sigma = np.asarray(sigma, dtype=float)
    out = sigma / mu0 * (1.0 + np.abs(sigma / tau_half) ** (p - 1.0))
    return out if out.ndim else float(out)


def _expand_bracket(law, target, max_doublings=2000):
    # march b outward until law(b) >= target, checking monotonicity on the way
    lo, law_lo = 0.0, 0.0
    hi = max(1.0, target)
    for _ in range(max_doublings):
        law_hi = law(hi)
        if not np.isfinite(law_hi):
            break
        if law_hi < law_lo:
            raise NonMonotoneLawError(f"stress law decreases between s={lo!r} and s={hi!r}")
        if law_hi >= target:
            return lo, hi
        lo, law_lo = hi, law_hi
        hi *= 2.0
    raise NonMonotoneLawError(f"stress law never reaches {target!r}")


def invert_stress_law(mu, sigma, tol=1e-12):
    """Solve ``mu(|s|) * s == sigma`` for the shear rate s.

    Parameters
    ----------
    mu : callable
        Viscosity as a function of the absolute shear rate.
    sigma : float
        Target shear stress.
    tol : float
        The returned s satisfies ``|mu(|s|) s - sigma| <= tol * (1 + |sigma|)``.

    Raises
    ------
    NonMonotoneLawError
        If the bracketing search meets a decrease of the stress law.
    """
    sigma = float(sigma)
    if sigma == 0.0:
        return 0.0
    target = abs(sigma)
    bound = tol * (1.0 + target)

    def law(s):
        return mu(abs(s)) * s

    lo, hi = _expand_bracket(law, target)
    s = brentq(lambda s: law(s) - target, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    # secant polish, in case brentq stopped on the s-tolerance before the stress one
    for _ in range(20):
        resid = law(s) - target
        if abs(resid) <= bound:
            break
        h = 1e-7 * max(abs(s), 1e-300)
        slope = (law(s + h) - law(s - h)) / (2 * h)
        if not slope > 0:
            raise NonMonotoneLawError(f"nonpositive stress-law slope at s={s!r}")
        s -= resid / slope
    return math.copysign(s, sigma)

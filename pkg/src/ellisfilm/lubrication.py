"""Cross-sectionally averaged fluxes for arbitrary monotone stress laws.

Each layer is described by its shear-rate function psi, the inverse of the
stress law ``s -> mu(|s|) s``. The fluxes are evaluated by adaptive quadrature
of the lubrication velocity profiles; with the Newtonian/Ellis closures they
reproduce the closed-form mobilities in :mod:`ellisfilm.model` and serve as an
independent check on them.

Sign and scaling conventions: ``f3`` is f_xxx, ``h3`` is (f + g)_xxx, and the
time has been rescaled by tau (so the fluxes carry a 1/tau prefactor that is
inert for tau = 1).
"""

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .quadrature import adaptive_gauss_legendre
from .rheology import ellis_psi, invert_stress_law

__all__ = [
    "ClosurePair",
    "newtonian_closure",
    "ellis_closure",
    "closure_from_viscosities",
    "interface_velocity",
    "flux_lower_general",
    "flux_upper_general",
]


@dataclass(frozen=True)
class ClosurePair:
    """Shear-rate functions of the lower and upper fluid (odd, increasing)."""

    psi_minus: Callable
    psi_plus: Callable


def _identity(sigma):
    return np.asarray(sigma, dtype=float)


def newtonian_closure(params):
    """Newtonian lower fluid (mu- = 1) under a Newtonian upper fluid of viscosity mu0+."""
    mu0 = params.mu0_plus
    return ClosurePair(_identity, lambda sigma: np.asarray(sigma, dtype=float) / mu0)


def ellis_closure(params):
    """Newtonian lower fluid under an Ellis upper fluid."""
    mu0, tau_half, p = params.mu0_plus, params.tau_half, params.p
    return ClosurePair(_identity, lambda sigma: ellis_psi(sigma, mu0, tau_half, p))


def closure_from_viscosities(mu_minus, mu_plus, tol=1e-13):
    """Build a closure by numerically inverting two viscosity laws.

    `mu_minus` and `mu_plus` map an absolute shear rate to a viscosity. Every
    psi evaluation runs a root-find, so this is slow; it exists for laws without
    an explicit inverse.
    """

    def make(mu):
        invert = np.vectorize(lambda sigma: invert_stress_law(mu, sigma, tol), otypes=[float])
        return lambda sigma: invert(np.asarray(sigma, dtype=float))

    return ClosurePair(make(mu_minus), make(mu_plus))


def interface_velocity(f, g, f3, h3, params, closure, qtol=1e-10):
    """Horizontal velocity of the lower fluid at the fluid-fluid interface z = f."""
    tau, ms = params.tau, params.m * params.s_plus
    s_minus = params.s_minus
    psi = closure.psi_minus

    def integrand(r):
        return psi(tau * ms * h3 * (g + r) + tau * s_minus * f3 * r)

    return adaptive_gauss_legendre(integrand, 0.0, f, qtol) / tau


def flux_lower_general(f, g, f3, h3, params, closure, qtol=1e-10):
    """Flux of the lower film, ``(1/tau) f**2 int_0^1 y psi-(...) dy``."""
    if f == 0:
        return 0.0
    tau, ms = params.tau, params.m * params.s_plus
    s_minus = params.s_minus
    psi = closure.psi_minus

    def integrand(y):
        return y * psi(tau * ms * h3 * (g + y * f) + tau * s_minus * f3 * y * f)

    return f * f * adaptive_gauss_legendre(integrand, 0.0, 1.0, qtol) / tau


def flux_upper_general(f, g, f3, h3, params, closure, qtol=1e-10):
    """Flux of the upper film.

    The upper layer is carried by the interface velocity u-(f) and sheared on
    top of it::

        g * u-(f) + (1/tau) int_0^g r psi+(tau s+ h3 r) dr

    The slip term is what makes the Ellis specialisation come out right; the
    shear integral alone is only the upper film's flux relative to the interface.
    """
    if g == 0:
        return 0.0
    tau, s_plus = params.tau, params.s_plus
    psi = closure.psi_plus

    def integrand(r):
        return r * psi(tau * s_plus * h3 * r)

    shear = adaptive_gauss_legendre(integrand, 0.0, g, qtol) / tau
    slip = interface_velocity(f, g, f3, h3, params, closure, qtol) if f > 0 else 0.0
    return g * slip + shear

"""Closed-form algebra of the Ellis-on-Newtonian two-layer film.

Unknowns are the lower film height ``f`` and the upper film height ``g``; the
free surface sits at ``h = f + g``. In divergence form::

    f_t + (p11 f_xxx + p12 h_xxx)_x = 0
    h_t + (p21 f_xxx + p22 h_xxx + C_p |g|**(p+2) Phi(h_xxx))_x = 0

All functions broadcast over numpy arrays. Throughout, ``f3`` means f_xxx and
``h3`` means h_xxx.
"""

from typing import NamedTuple

import numpy as np

from .rheology import c_p, phi, phi_prime

__all__ = [
    "MobilityCoefficients",
    "CoefficientMatrix",
    "mobilities",
    "mobility_gradients",
    "flux_pair",
    "coefficient_matrix",
    "det_and_eigenvalues",
    "closed_form_determinant",
    "lower_order_terms",
    "pressures",
    "lower_velocity",
    "upper_velocity",
    "velocity_profiles",
]


class MobilityCoefficients(NamedTuple):
    p11: np.ndarray
    p12: np.ndarray
    p21: np.ndarray
    p22: np.ndarray


class CoefficientMatrix(NamedTuple):
    """Entries of the principal (fourth-order) coefficient matrix in (f, g) variables."""

    a11: np.ndarray
    a12: np.ndarray
    a21: np.ndarray
    a22: np.ndarray

    def as_array(self):
        return np.array([[self.a11, self.a12], [self.a21, self.a22]], dtype=float)


def mobilities(f, g, params):
    ms = params.m * params.s_plus
    s_minus = params.s_minus
    p11 = s_minus / 3.0 * f**3
    p12 = ms * (f**3 / 3.0 + 0.5 * f**2 * g)
    p21 = p11 + 0.5 * s_minus * f**2 * g
    p22 = p12 + ms * (f * g**2 + 0.5 * f**2 * g) + params.s_plus / (3.0 * params.mu0_plus) * g**3
    return MobilityCoefficients(p11, p12, p21, p22)


def mobility_gradients(f, g, params):
    """Partial derivatives of the mobilities.

    Returns two :class:`MobilityCoefficients`: derivatives with respect to f and
    with respect to g.
    """
    ms = params.m * params.s_plus
    s_minus = params.s_minus
    zero = 0.0 * f * g
    d11_f = s_minus * f**2
    d12_f = ms * (f**2 + f * g)
    d21_f = d11_f + s_minus * f * g
    d22_f = d12_f + ms * (g**2 + f * g)
    d11_g = zero
    d12_g = 0.5 * ms * f**2
    d21_g = 0.5 * s_minus * f**2
    d22_g = d12_g + ms * (2.0 * f * g + 0.5 * f**2) + params.s_plus / params.mu0_plus * g**2
    return (
        MobilityCoefficients(d11_f, d12_f, d21_f, d22_f),
        MobilityCoefficients(d11_g, d12_g, d21_g, d22_g),
    )


def flux_pair(f, g, f3, h3, params):
    """Fluxes of f and of h = f + g.

    Returns ``(J_f, J_h)``; the upper film alone carries ``J_h - J_f``.
    """
    p11, p12, p21, p22 = mobilities(f, g, params)
    j_f = p11 * f3 + p12 * h3
    j_h = p21 * f3 + p22 * h3 + c_p(params) * np.abs(g) ** (params.p + 2.0) * phi(h3, params.p)
    return j_f, j_h


def coefficient_matrix(f, g, f3, h3, params):
    """Principal coefficients of the system written as ``u_t + A(u, u_xxx) u_xxxx = -F``."""
    ms = params.m * params.s_plus
    s_minus = params.s_minus
    thinning = c_p(params) * np.abs(g) ** (params.p + 2.0) * phi_prime(h3, params.p)
    upper = 0.5 * ms * f**2 * g + ms * f * g**2 + params.s_plus / (3.0 * params.mu0_plus) * g**3
    a11 = (ms + s_minus) / 3.0 * f**3 + 0.5 * ms * f**2 * g
    a12 = ms * (f**3 / 3.0 + 0.5 * f**2 * g)
    a21 = upper + 0.5 * s_minus * f**2 * g + thinning
    a22 = upper + thinning
    return CoefficientMatrix(a11, a12, a21, a22)


def _two_product(a, b):
    # Dekker's error-free product: a * b == prod + err exactly
    split = 134217729.0  # 2**27 + 1
    prod = a * b
    ca, cb = split * a, split * b
    a_hi = ca - (ca - a)
    b_hi = cb - (cb - b)
    a_lo, b_lo = a - a_hi, b - b_hi
    err = ((a_hi * b_hi - prod) + a_hi * b_lo + a_lo * b_hi) + a_lo * b_lo
    return prod, err


def det_and_eigenvalues(a):
    """Determinant and the two eigenvalues (lambda_minus <= lambda_plus) of `a`.

    The discriminant is evaluated as ``(a11 - a22)**2 / 4 + a12 a21``, which is
    the same quantity as ``trace**2 / 4 - det`` but does not cancel when the
    eigenvalues are far apart. The determinant itself is formed from exact
    products, since ``a11 a22`` and ``a12 a21`` nearly cancel for thin lower films.
    """
    a11, a12, a21, a22 = (np.asarray(v, dtype=float) for v in a)
    d1, e1 = _two_product(a11, a22)
    d2, e2 = _two_product(a12, a21)
    det = (d1 - d2) + (e1 - e2)
    half_trace = 0.5 * (a11 + a22)
    root = np.sqrt(0.25 * (a11 - a22) ** 2 + a12 * a21)
    lam_plus = half_trace + root
    # Vieta keeps the small eigenvalue accurate
    lam_minus = np.where(lam_plus != 0, det / np.where(lam_plus != 0, lam_plus, 1.0), half_trace - root)
    if np.ndim(lam_minus) == 0:
        return float(det), float(lam_minus), float(lam_plus)
    return det, lam_minus, lam_plus


def closed_form_determinant(f, g, h3, params):
    """Factored determinant of :func:`coefficient_matrix`; positive for f, g > 0."""
    s_plus, s_minus = params.s_plus, params.s_minus
    return (
        params.m * s_minus * s_plus / 12.0 * f**4 * g**2
        + s_minus * s_plus / (9.0 * params.mu0_plus) * f**3 * g**3
        + c_p(params) * s_minus / 3.0 * f**3 * np.abs(g) ** (params.p + 2.0) * phi_prime(h3, params.p)
    )


def lower_order_terms(f, g, fx, gx, f3, h3, params):
    """Lower-order part ``(F1, F2)`` of the quasilinear form.

    Expanding the divergence form by the product rule gives
    ``(J_f, J_g)_x = A(u, u_xxx) u_xxxx + (F1, F2)``, where ``J_g = J_h - J_f``.
    """
    ms = params.m * params.s_plus
    s_minus = params.s_minus
    F1 = ms * (f**2 * fx + f * g * fx + 0.5 * f**2 * gx) * h3 + s_minus * f**2 * fx * f3
    F2 = (
        ms
        * (f * g * fx + 0.5 * f**2 * gx + g**2 * fx + 2.0 * f * g * gx + g**2 * gx / (params.m * params.mu0_plus))
        * h3
        + s_minus * (f * g * fx + 0.5 * f**2 * gx) * f3
        + c_p(params) * (params.p + 2.0) * np.abs(g) ** (params.p + 1.0) * phi(h3, params.p) * gx
    )
    return F1, F2


def pressures(f_xx, h_xx, params):
    """Pressures ``(p_minus, p_plus)`` in the lower and upper layer."""
    p_plus = -params.s_plus * h_xx
    p_minus = -params.m * params.s_plus * h_xx - params.s_minus * f_xx
    return p_minus, p_plus


def lower_velocity(z, f, g, f3, h3, params):
    """Horizontal velocity in the Newtonian layer, 0 <= z <= f."""
    ms = params.m * params.s_plus
    return ms * h3 * (f * z + g * z - 0.5 * z**2) + params.s_minus * f3 * (f * z - 0.5 * z**2)


def upper_velocity(z, f, g, f3, h3, params):
    """Horizontal velocity in the Ellis layer, f <= z <= f + g."""
    ms = params.m * params.s_plus
    p = params.p
    at_interface = ms * h3 * (0.5 * f**2 + f * g) + 0.5 * params.s_minus * f3 * f**2
    newtonian = params.s_plus / params.mu0_plus * h3 * (f * z + g * z - 0.5 * z**2 - 0.5 * f**2 - f * g)
    # |s+|^p / ((p+1) mu0 tau_half^(p-1)) == C_p (p+2)/(p+1)
    thinning = (
        c_p(params) * (p + 2.0) / (p + 1.0)
        * phi(h3, p)
        * (np.abs(f + g - z) ** (p + 1.0) - np.abs(g) ** (p + 1.0))
    )
    return at_interface + newtonian - thinning


def velocity_profiles(f, g, f3, h3, params, z):
    """Velocity at heights `z` through both layers (lower law below f, upper above)."""
    z = np.asarray(z, dtype=float)
    if np.any(z < 0) or np.any(z > f + g):
        raise ValueError(f"sample heights must lie in [0, {f + g!r}]")
    return np.where(
        z <= f,
        lower_velocity(z, f, g, f3, h3, params),
        upper_velocity(z, f, g, f3, h3, params),
    )

"""Linear stability of flat films.

Linearising about a flat film (f*, g*) leaves ``u_t + A* u_xxxx = 0`` with a
constant 2x2 matrix A*. With the reflective boundary conditions the modes are
``cos(n pi x / L)``, so mode n decays at the rates ``lambda_pm (n pi / L)**4``,
where ``lambda_minus < lambda_plus`` are the eigenvalues of A*. The slowest
rate, ``lambda_minus (pi / L)**4``, is the predicted decay rate ``kappa``.
"""

from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from .model import coefficient_matrix, det_and_eigenvalues

__all__ = [
    "StabilityReport",
    "flat_matrix",
    "flat_eigenvectors",
    "modal_decay_rates",
    "discrete_symbol",
    "ellipticity_constant",
    "stability_report",
]


@dataclass
class StabilityReport:
    f_star: float
    g_star: float
    a_star: np.ndarray
    lambda_minus: float
    lambda_plus: float
    mode_rates: List[Tuple[int, float, float]] = field(default_factory=list)
    kappa_pred: float = float("nan")
    epsilon_ellipticity: float = float("nan")


def flat_matrix(f_star, g_star, params):
    """A* = A(u*, 0). Only at p = 1 does the shear-thinning term survive (Phi'(0) = 1)."""
    return coefficient_matrix(float(f_star), float(g_star), 0.0, 0.0, params).as_array()


def flat_eigenvectors(a_star):
    """Eigenvalues (ascending) and matching eigenvectors (columns) of A*."""
    vals, vecs = np.linalg.eig(a_star)
    order = np.argsort(vals.real)
    return vals.real[order], vecs.real[:, order]


def modal_decay_rates(lambda_minus, lambda_plus, length, modes):
    """``(n, lambda_minus k_n**4, lambda_plus k_n**4)`` with ``k_n = n pi / L``."""
    out = []
    for n in modes:
        k4 = (n * np.pi / length) ** 4
        out.append((int(n), float(lambda_minus * k4), float(lambda_plus * k4)))
    return out


def discrete_symbol(mode, grid):
    """Eigenvalue of the grid's fourth difference on ``cos(mode pi x / L)``.

    Tends to ``(mode pi / L)**4`` as the grid is refined.
    """
    k = mode * np.pi / grid.length
    return (2.0 * np.sin(0.5 * k * grid.dx) / grid.dx) ** 4


def ellipticity_constant(f, g, params):
    """Coercivity constant of the Newtonian part of the dissipation.

    The bound is proven for viscosity ratios m <= 1; for larger m it can fail.
    """
    s_plus, s_minus, mu0, m = params.s_plus, params.s_minus, params.mu0_plus, params.m
    first = s_plus / (6.0 * mu0) * g**3
    denom = 6.0 * m * s_plus * (mu0 * f**3 + 2.0 * g**3)
    with np.errstate(invalid="ignore", divide="ignore"):
        second = np.where(denom > 0, s_minus**2 * f**3 * g**3 / np.where(denom > 0, denom, 1.0), 0.0)
    out = np.minimum(first, second)
    return float(out) if np.ndim(out) == 0 else out


def stability_report(f_star, g_star, params, length, n_modes=5):
    if not (f_star > 0 and g_star > 0):
        raise ValueError("flat heights must be positive")
    a = flat_matrix(f_star, g_star, params)
    _, lam_minus, lam_plus = det_and_eigenvalues((a[0, 0], a[0, 1], a[1, 0], a[1, 1]))
    rates = modal_decay_rates(lam_minus, lam_plus, length, range(1, n_modes + 1))
    return StabilityReport(
        f_star=float(f_star),
        g_star=float(g_star),
        a_star=a,
        lambda_minus=float(lam_minus),
        lambda_plus=float(lam_plus),
        mode_rates=rates,
        kappa_pred=rates[0][1],
        epsilon_ellipticity=ellipticity_constant(f_star, g_star, params),
    )

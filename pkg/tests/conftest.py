import numpy as np
import pytest

from ellisfilm.rheology import FluidParams


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def unit_params():
    return FluidParams()


def random_params(rng, p=None, m_range=(0.1, 10.0)):
    """Log-uniform physical constants; `p` fixed or drawn from [1, 4]."""
    def lu(lo, hi):
        return float(np.exp(rng.uniform(np.log(lo), np.log(hi))))

    return FluidParams(
        m=lu(*m_range),
        s_plus=lu(0.1, 10.0),
        s_minus=lu(0.1, 10.0),
        mu0_plus=lu(0.1, 10.0),
        tau_half=lu(0.1, 10.0),
        p=float(p) if p is not None else float(rng.uniform(1.0, 4.0)),
    )


def exact_direct_determinant(f, g, h3, params):
    """a11 a22 - a12 a21 of the coefficient matrix in exact rational arithmetic.

    Heights and constants are taken as the exact binary values of the floats.
    The shear-thinning term is irrational for non-integer p; it enters a21 and
    a22 as one shared value, so it is rounded once and then treated as exact.
    """
    from fractions import Fraction as Q

    from ellisfilm.rheology import c_p, phi_prime

    f_, g_ = Q(f), Q(g)
    m, s_plus, s_minus, mu0 = (Q(v) for v in (params.m, params.s_plus, params.s_minus, params.mu0_plus))
    ms = m * s_plus
    thin = Q(float(c_p(params) * abs(g) ** (params.p + 2.0) * phi_prime(h3, params.p)))
    upper = ms * f_**2 * g_ / 2 + ms * f_ * g_**2 + s_plus / (3 * mu0) * g_**3
    a11 = (ms + s_minus) / 3 * f_**3 + ms * f_**2 * g_ / 2
    a12 = ms * (f_**3 / 3 + f_**2 * g_ / 2)
    a21 = upper + s_minus * f_**2 * g_ / 2 + thin
    a22 = upper + thin
    return a11 * a22 - a12 * a21, float(a11 * a22 / (a11 * a22 - a12 * a21))

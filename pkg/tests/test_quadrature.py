import math

import numpy as np
import pytest

from ellisfilm.quadrature import QuadratureError, adaptive_gauss_legendre, gauss_legendre


def test_fixed_rule_integrates_polynomials_exactly():
    for k in range(0, 31):
        value = gauss_legendre(lambda x: x**k, 0.0, 2.0, order=16)
        assert value == pytest.approx(2.0 ** (k + 1) / (k + 1), rel=1e-13)


def test_adaptive_smooth_and_reversed_interval():
    assert adaptive_gauss_legendre(np.exp, 0.0, 1.0) == pytest.approx(math.e - 1, rel=1e-14)
    assert adaptive_gauss_legendre(np.exp, 1.0, 0.0) == pytest.approx(1 - math.e, rel=1e-14)
    assert adaptive_gauss_legendre(np.exp, 0.5, 0.5) == 0.0


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_adaptive_handles_interior_kink(p):
    # |x - c|^(p-1) (x - c): the shape of an Ellis integrand across a sign change
    c = 0.3
    func = lambda x: np.abs(x - c) ** (p - 1) * (x - c)  # noqa: E731
    exact = ((1 - c) ** (p + 1) - c ** (p + 1)) / (p + 1)
    assert adaptive_gauss_legendre(func, 0.0, 1.0, qtol=1e-12) == pytest.approx(exact, rel=1e-11)


def test_adaptive_sqrt_endpoint_singularity():
    # not a target integrand shape, but bisection still localises it
    value = adaptive_gauss_legendre(np.sqrt, 0.0, 1.0, qtol=1e-8)
    assert value == pytest.approx(2.0 / 3.0, rel=1e-7)


def test_depth_limit_is_enforced():
    with pytest.raises(QuadratureError, match="40 bisections"):
        adaptive_gauss_legendre(np.sqrt, 0.0, 1.0, qtol=1e-10)


def test_nonconvergence_raises():
    with pytest.raises(QuadratureError):
        adaptive_gauss_legendre(lambda x: np.sign(x - 1 / 3), 0.0, 1.0, qtol=1e-15, max_depth=3)

"""Adaptive Gauss-Legendre quadrature by interval bisection."""

from functools import lru_cache

import numpy as np

__all__ = ["QuadratureError", "gauss_legendre", "adaptive_gauss_legendre"]


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach the tolerance within the depth limit."""


@lru_cache(maxsize=None)
def _rule(order):
    return np.polynomial.legendre.leggauss(order)


def gauss_legendre(func, a, b, order=16):
    """Fixed-order Gauss-Legendre rule on [a, b]; `func` must accept arrays."""
    x, w = _rule(order)
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    return half * np.dot(w, func(mid + half * x))


def adaptive_gauss_legendre(func, a, b, qtol=1e-10, max_depth=40, low=8, high=16):
    """Integrate `func` over [a, b] to relative tolerance `qtol`.

    Each panel is integrated with a `low`- and a `high`-point rule; panels whose
    two results disagree by more than their share of the global tolerance are
    bisected. The global scale is an estimate of the integral of ``|func|``, so
    integrands with cancelling sign changes still terminate.

    Raises
    ------
    QuadratureError
        If a panel still fails the test after `max_depth` bisections.
    """
    a = float(a)
    b = float(b)
    if a == b:
        return 0.0
    x, w = _rule(high)
    half = 0.5 * (b - a)
    scale = abs(half) * np.dot(w, np.abs(func(0.5 * (a + b) + half * x)))
    if scale == 0.0 or not np.isfinite(scale):
        # either an identically-zero integrand or a broken one; let the plain rule say which
        return float(gauss_legendre(func, a, b, high))

    length = b - a
    total = 0.0
    stack = [(a, b, 0)]
    while stack:
        lo, hi, depth = stack.pop()
        coarse = gauss_legendre(func, lo, hi, low)
        fine = gauss_legendre(func, lo, hi, high)
        allowed = qtol * scale * (hi - lo) / length
        if abs(fine - coarse) <= allowed:
            total += fine
            continue
        if depth >= max_depth:
            raise QuadratureError(
                f"no convergence on [{lo!r}, {hi!r}] after {max_depth} bisections "
                f"(error estimate {abs(fine - coarse):.3e})"
            )
        mid = 0.5 * (lo + hi)
        stack.append((mid, hi, depth + 1))
        stack.append((lo, mid, depth + 1))
    return float(total)

import math

import numpy as np
import pytest

from ellisfilm.lubrication import (
    closure_from_viscosities,
    ellis_closure,
    flux_lower_general,
    flux_upper_general,
    interface_velocity,
    newtonian_closure,
)
from ellisfilm.model import flux_pair, lower_velocity, mobilities
from ellisfilm.rheology import FluidParams

from conftest import random_params


def test_lower_flux_worked_example():
    params = FluidParams(tau_half=math.inf)
    value = flux_lower_general(2.0, 1.0, 1.0, 1.0, params, newtonian_closure(params))
    assert value == pytest.approx(22.0 / 3.0, rel=1e-13)


def test_zero_thickness_gives_zero_flux():
    params = FluidParams()
    closure = ellis_closure(params)
    assert flux_lower_general(0.0, 1.0, 3.0, -2.0, params, closure) == 0.0
    assert flux_upper_general(1.0, 0.0, 3.0, -2.0, params, closure) == 0.0


def test_newtonian_closure_matches_mobilities(rng):
    for _ in range(50):
        params = random_params(rng)
        f, g = rng.uniform(0.1, 5, 2)
        f3, h3 = rng.uniform(-10, 10, 2)
        p11, p12, _, _ = mobilities(f, g, params)
        value = flux_lower_general(f, g, f3, h3, params, newtonian_closure(params))
        assert value == pytest.approx(p11 * f3 + p12 * h3, rel=1e-10)


def test_interface_velocity_matches_lower_profile(rng):
    params = random_params(rng)
    f, g, f3, h3 = 1.3, 0.7, -2.0, 4.5
    expected = lower_velocity(f, f, g, f3, h3, params)
    assert interface_velocity(f, g, f3, h3, params, ellis_closure(params)) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("p", [1.0, 1.5, 2.0, 3.0])
def test_ellis_upper_flux_is_g_flux(rng, p):
    for _ in range(30):
        params = random_params(rng, p=p)
        f, g = rng.uniform(0.1, 5, 2)
        f3, h3 = rng.uniform(-10, 10, 2)
        j_f, j_h = flux_pair(f, g, f3, h3, params)
        closure = ellis_closure(params)
        lower = flux_lower_general(f, g, f3, h3, params, closure)
        upper = flux_upper_general(f, g, f3, h3, params, closure)
        assert lower == pytest.approx(j_f, rel=1e-9)
        assert upper == pytest.approx(j_h - j_f, rel=1e-9, abs=1e-12 * abs(j_h))
        assert lower + upper == pytest.approx(j_h, rel=1e-9)


def test_single_film_reduction():
    params = FluidParams(s_plus=1.5, mu0_plus=0.8, tau_half=0.7, p=2.5)
    g, h3 = 1.2, -3.0
    expected = params.s_plus / (3 * params.mu0_plus) * g**3 * h3 + params.c_p * g ** (params.p + 2) * (
        -(abs(h3) ** params.p)
    )
    assert flux_upper_general(0.0, g, 0.0, h3, params, ellis_closure(params)) == pytest.approx(expected, rel=1e-10)


def test_odd_symmetry(rng):
    params = random_params(rng, p=2.0)
    closure = ellis_closure(params)
    for _ in range(10):
        f, g = rng.uniform(0.1, 3, 2)
        f3, h3 = rng.uniform(-10, 10, 2)
        for flux in (flux_lower_general, flux_upper_general):
            assert flux(f, g, -f3, -h3, params, closure) == pytest.approx(-flux(f, g, f3, h3, params, closure), rel=1e-10)


def test_upper_flux_sign_follows_h3(rng):
    params = random_params(rng, p=1.5)
    closure = ellis_closure(params)
    for h3 in (-4.0, -1e-3, 1e-3, 7.0):
        assert np.sign(flux_upper_general(1.0, 0.8, 0.0, h3, params, closure)) == np.sign(h3)


def test_tau_cancels_for_linear_closures():
    base = FluidParams(m=2, s_plus=0.5, s_minus=3, mu0_plus=2, tau_half=math.inf)
    scaled = FluidParams(m=2, s_plus=0.5, s_minus=3, mu0_plus=2, tau_half=math.inf, tau=7.0)
    args = (1.1, 0.9, 2.0, -1.5)
    for flux in (flux_lower_general, flux_upper_general):
        a = flux(*args, base, newtonian_closure(base))
        b = flux(*args, scaled, newtonian_closure(scaled))
        assert a == pytest.approx(b, rel=1e-13)


def test_numerically_inverted_closure_agrees_with_explicit():
    params = FluidParams(m=1.3, s_plus=0.8, s_minus=1.2, mu0_plus=1.5, tau_half=math.inf)
    numeric = closure_from_viscosities(lambda s: 1.0, lambda s: params.mu0_plus)
    explicit = newtonian_closure(params)
    args = (0.9, 1.4, 1.7, -0.6, params)
    assert flux_upper_general(*args, numeric, qtol=1e-9) == pytest.approx(flux_upper_general(*args, explicit), rel=1e-9)
    assert flux_lower_general(*args, numeric, qtol=1e-9) == pytest.approx(flux_lower_general(*args, explicit), rel=1e-9)

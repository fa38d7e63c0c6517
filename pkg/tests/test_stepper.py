import math

import numpy as np
import pytest

from ellisfilm.diagnostics import fit_decay_rate
from ellisfilm.grid import Grid, State, integrate
from ellisfilm.rheology import FluidParams
from ellisfilm.stability import stability_report
from ellisfilm.stepper import (
    Status,
    StepConfig,
    _assemble,
    _interleave,
    _residual,
    advance,
    blowup_norm,
    face_fluxes,
    rates,
    step_implicit_newton,
    step_semi_implicit,
)

from conftest import random_params


def _bumpy(grid, amp=0.2):
    x = grid.x
    return State(0.0, 1 + amp * np.cos(np.pi * x) + 0.3 * amp * np.cos(3 * np.pi * x),
                 0.9 - amp * np.cos(2 * np.pi * x), grid)


def _dense(ab, size, bands=5):
    out = np.zeros((size, size))
    for i in range(size):
        for j in range(max(0, i - bands), min(size, i + bands + 1)):
            out[i, j] = ab[bands + i - j, j]
    return out


@pytest.mark.parametrize("p", [1.0, 2.0, 2.5, 3.0])
def test_jacobian_matches_finite_differences(rng, p):
    params = random_params(rng, p=p)
    grid = Grid(1.0, 12)
    s = _bumpy(grid)
    dt = 1e-3
    ff, r_f, r_g = _residual(s.f, s.g, s.f, s.g, params, grid, dt)
    jac = _dense(_assemble(s.f, s.g, ff, params, grid, dt, True), 2 * grid.n)
    u = _interleave(s.f, s.g)
    fd = np.zeros_like(jac)
    eps = 1e-7
    for k in range(u.size):
        cols = []
        for sign in (1, -1):
            v = u.copy()
            v[k] += sign * eps
            _, a, b = _residual(v[0::2], v[1::2], s.f, s.g, params, grid, dt)
            cols.append(_interleave(a, b))
        fd[:, k] = (cols[0] - cols[1]) / (2 * eps)
    np.testing.assert_allclose(jac, fd, atol=1e-6 * np.max(np.abs(fd)))


def test_face_fluxes_of_flat_state_vanish(unit_params):
    grid = Grid(1.0, 16)
    ff = face_fluxes(np.ones(16), np.full(16, 2.0), unit_params, grid)
    assert not np.any(ff.j_f) and not np.any(ff.j_g)
    f_t, g_t = rates(np.ones(16), np.ones(16), unit_params, grid)
    assert not np.any(f_t) and not np.any(g_t)


@pytest.mark.parametrize("step", [step_implicit_newton, step_semi_implicit])
def test_single_step_conserves_mass_and_advances_time(step, unit_params):
    grid = Grid(1.0, 64)
    s = _bumpy(grid)
    out = step(s, 1e-4, unit_params, grid)
    assert out.status is Status.OK
    assert out.state.t == pytest.approx(1e-4)
    assert integrate(out.state.f, grid) == pytest.approx(integrate(s.f, grid), rel=1e-14)
    assert integrate(out.state.g, grid) == pytest.approx(integrate(s.g, grid), rel=1e-14)


def test_newton_solves_backward_euler(unit_params):
    grid = Grid(1.0, 64)
    s = _bumpy(grid)
    out = step_implicit_newton(s, 1e-4, unit_params, grid)
    _, r_f, r_g = _residual(out.state.f, out.state.g, s.f, s.g, unit_params, grid, 1e-4)
    assert max(np.max(np.abs(r_f)), np.max(np.abs(r_g))) < 1e-9
    assert 1 < out.iterations < StepConfig().newton_max_iter


def test_schemes_agree_to_second_order_in_one_step():
    params = FluidParams(p=2.0)
    # coarsest grid, so that dt is small against the stiffest mode lambda_plus (pi / dx)**4
    grid = Grid(1.0, 8)
    s = _bumpy(grid, 0.1)
    cfg = StepConfig(newton_tol=1e-15)
    dts = 4e-7 / 2.0 ** np.arange(6)
    diffs = []
    for dt in dts:
        a = step_implicit_newton(s, dt, params, grid, cfg).state
        b = step_semi_implicit(s, dt, params, grid).state
        diffs.append(max(np.max(np.abs(a.f - b.f)), np.max(np.abs(a.g - b.g))))
    slope = np.polyfit(np.log(dts), np.log(diffs), 1)[0]
    assert slope == pytest.approx(2.0, abs=0.1)
    assert diffs[-2] / diffs[-1] == pytest.approx(4.0, rel=0.05)


def test_energy_decreases_every_step():
    from ellisfilm.diagnostics import energy

    params = FluidParams(p=1.5, m=0.5)
    grid = Grid(1.0, 64)
    energies = []
    advance(_bumpy(grid), 0.02, StepConfig(dt0=1e-4), params, grid,
            lambda st, rec: energies.append(energy(st, params, grid)))
    assert np.all(np.diff(energies) <= 1e-12 * energies[0])


def test_advance_hits_t_end_and_thins_records(unit_params):
    grid = Grid(1.0, 32)
    seen = []
    cfg = StepConfig(dt0=1e-3, dt_max=1e-3, observe_every=4)
    out, records = advance(_bumpy(grid, 0.05), 0.0105, cfg, unit_params, grid, lambda s, r: seen.append(r.t))
    assert out.status is Status.OK
    assert out.state.t == pytest.approx(0.0105, abs=1e-15)
    assert [r.t for r in records] == seen
    assert records[0].t == 0.0 and records[-1].t == out.state.t
    assert len(records) == 1 + 10 // 4 + 1


def test_step_size_grows_after_successes(unit_params):
    grid = Grid(1.0, 32)
    cfg = StepConfig(dt0=1e-5, dt_max=1e-3)
    _, records = advance(_bumpy(grid, 0.01), 5e-4, cfg, unit_params, grid)
    dts = [r.dt for r in records[1:-1]]
    assert dts[0] == pytest.approx(1e-5) and max(dts) > 1.5e-5


def test_step_failure_below_dt_min(unit_params):
    grid = Grid(1.0, 32)
    cfg = StepConfig(dt0=1e-2, dt_min=1e-2, dt_max=1e-2, newton_max_iter=1)
    out, records = advance(_bumpy(grid), 0.1, cfg, unit_params, grid)
    assert out.status is Status.STEP_FAILURE
    assert out.state.t == 0.0 and records[-1].t == 0.0


def test_blowup_classification(unit_params):
    grid = Grid(1.0, 32)
    s = _bumpy(grid)
    cfg = StepConfig(blowup_norm_cap=0.5 * blowup_norm(s, grid))
    out, records = advance(s, 0.1, cfg, unit_params, grid)
    assert out.status is Status.BLOWUP and records[-1].t == out.state.t > 0


def test_rupture_is_resolved_before_reporting():
    # fast lower interface, slow upper: the upper film thins in a short transient
    params = FluidParams(m=10, s_plus=10, s_minus=0.01)
    grid = Grid(1.0, 64)
    s = State(0.0, 1 + 0.5 * np.cos(2 * np.pi * grid.x), np.full(64, 0.5), grid)
    floor = 0.35
    out, records = advance(s, 2.0, StepConfig(rupture_floor=floor), params, grid)
    assert out.status is Status.RUPTURE
    last = records[-1]
    assert min(last.min_f, last.min_g) <= floor
    # resolved crossing: the overshoot is smaller than the margin it started from
    assert min(last.min_f, last.min_g) > floor - (0.5 - floor)
    # the same configuration without a floor stays positive
    out, _ = advance(s, 2.0, StepConfig(), params, grid)
    assert out.status is Status.OK and out.state.f.min() > 0 and out.state.g.min() > 0


def test_config_validation():
    with pytest.raises(ValueError):
        StepConfig(dt0=1.0, dt_max=0.1)
    with pytest.raises(ValueError):
        StepConfig(scheme="rk4")
    with pytest.raises(ValueError):
        StepConfig(observe_every=0)
    with pytest.raises(ValueError):
        advance(State(0, np.ones(8), np.ones(8)), 0.0, StepConfig(), FluidParams(), Grid(1.0, 8))


def _decay_rate(delta, n=256, dt=1e-3, t_end=0.5):
    params = FluidParams()
    grid = Grid(1.0, n)
    s = State(0.0, 1 + delta * np.cos(np.pi * grid.x), np.ones(n), grid)
    cfg = StepConfig(dt0=dt, dt_max=dt, observe_every=10)
    _, records = advance(s, t_end, cfg, params, grid)
    late = [(r.t, r.perturbation_norm) for r in records if r.t >= 0.1]
    return fit_decay_rate(late)


def test_linear_and_nonlinear_decay_agree():
    grid = Grid(1.0, 256)
    dt = 1e-3
    report = stability_report(1.0, 1.0, FluidParams(), 1.0)
    # backward Euler damps mode 1 by 1/(1 + dt*kappa_h) per step, kappa_h on the discrete symbol
    from ellisfilm.stability import discrete_symbol

    kappa_h = report.lambda_minus * discrete_symbol(1, grid)
    predicted = -math.log1p(dt * kappa_h) / dt
    small, r2_small = _decay_rate(1e-4)
    large, r2_large = _decay_rate(1e-3)
    assert r2_small > 0.9999 and r2_large > 0.9999
    assert small == pytest.approx(predicted, rel=1e-3)
    assert large == pytest.approx(small, rel=1e-3)

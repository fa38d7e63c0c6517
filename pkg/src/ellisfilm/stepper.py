"""Time integration of the two-layer film system.

Space is discretised in conservative form: third derivatives live on cell
faces, mobilities on faces are arithmetic means of nodal mobilities, and nodal
rates are flux differences over the trapezoid cell widths (see
:func:`ellisfilm.grid.divergence_of_flux`). Two time integrators share that
spatial operator:

``implicit_newton``
    Backward Euler, solved by Newton's method with an analytic banded Jacobian.
``semi_implicit``
    Linearly implicit Euler. Mobilities are frozen at the old state and the
    shear-thinning term is linearised about the old third derivative, so the
    principal part is the frozen coefficient matrix ``A(u^n, u^n_xxx)`` times
    the discrete fourth derivative. One banded solve per step.

Unknowns are interleaved as ``(f_0, g_0, f_1, g_1, ...)``. The Jacobian then
has five sub- and super-diagonals.
"""

import enum
import logging
import math
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np
from scipy.linalg import LinAlgError, solve_banded

from .grid import State, d2, d4, face_average, integrate
from .model import mobilities, mobility_gradients
from .rheology import c_p, phi, phi_prime

__all__ = [
    "Status",
    "StepConfig",
    "StepOutcome",
    "FaceFluxes",
    "face_fluxes",
    "rates",
    "step_semi_implicit",
    "step_implicit_newton",
    "advance",
    "blowup_norm",
]

log = logging.getLogger(__name__)

_BANDS = 5  # half bandwidth of the interleaved two-field Jacobian
_STENCIL = np.array([-1.0, 3.0, -3.0, 1.0])  # face third difference, nodes k-1 .. k+2


class Status(str, enum.Enum):
    OK = "ok"
    RUPTURE = "rupture"
    BLOWUP = "blowup"
    STEP_FAILURE = "step_failure"


@dataclass(frozen=True)
class StepConfig:
    """Step-size control and termination thresholds.

    `rupture_floor` and `blowup_norm_cap` default (``None``) to values derived
    from the initial state in :func:`advance`: ``1e-8 * min(f0, g0)`` and
    ``blowup_factor`` times the initial :func:`blowup_norm`.
    """

    dt0: float = 1e-4
    dt_min: float = 1e-14
    dt_max: float = 1e-2
    scheme: str = "implicit_newton"
    newton_tol: float = 1e-10
    newton_max_iter: int = 25
    rupture_floor: Optional[float] = None
    blowup_norm_cap: Optional[float] = None
    blowup_factor: float = 1e8
    observe_every: int = 1

    def __post_init__(self):
        if not 0 < self.dt_min <= self.dt0 <= self.dt_max:
            raise ValueError("step sizes must satisfy 0 < dt_min <= dt0 <= dt_max")
        if self.scheme not in _SCHEMES:
            raise ValueError(f"scheme must be one of {sorted(_SCHEMES)}, got {self.scheme!r}")
        if not self.newton_tol > 0 or self.newton_max_iter < 1:
            raise ValueError("newton_tol must be positive and newton_max_iter >= 1")
        if self.observe_every < 1:
            raise ValueError("observe_every must be >= 1")


@dataclass
class StepOutcome:
    state: State
    status: Status
    dt_used: float
    iterations: int = 0
    message: str = ""


@dataclass
class FaceFluxes:
    """Face quantities of one state; `j_f`, `j_g` are the fluxes of f and g."""

    f3: np.ndarray
    h3: np.ndarray
    j_f: np.ndarray
    j_g: np.ndarray


def face_fluxes(f, g, params, grid):
    h = f + g
    f3 = np.diff(d2(f, grid)) / grid.dx
    h3 = np.diff(d2(h, grid)) / grid.dx
    p11, p12, p21, p22 = (face_average(p) for p in mobilities(f, g, params))
    thin = face_average(np.abs(g) ** (params.p + 2.0))
    j_f = p11 * f3 + p12 * h3
    j_h = p21 * f3 + p22 * h3 + c_p(params) * thin * phi(h3, params.p)
    return FaceFluxes(f3, h3, j_f, j_h - j_f)


def _flux_difference(j, grid):
    padded = np.concatenate(([0.0], j, [0.0]))
    return np.diff(padded) / grid.weights


def rates(f, g, params, grid):
    """Semi-discrete time derivatives ``(f_t, g_t)``."""
    ff = face_fluxes(f, g, params, grid)
    return -_flux_difference(ff.j_f, grid), -_flux_difference(ff.j_g, grid)


def _thinning_slope(h3, p):
    # Phi' has an infinite second derivative at 0 when 1 < p < 2; use a secant
    # slope there so Newton sees a Lipschitz Jacobian
    slope = phi_prime(h3, p)
    if 1.0 < p < 2.0:
        eta = 1e-8 * (1.0 + np.max(np.abs(h3)))
        near = np.abs(h3) < eta
        if np.any(near):
            secant = (phi(h3[near] + eta, p) - phi(h3[near] - eta, p)) / (2.0 * eta)
            slope = np.array(slope, copy=True)
            slope[near] = secant
    return slope


def _assemble(f, g, ff, params, grid, dt, with_mobility_terms):
    """Banded matrix of ``I + dt * d(flux difference)/du`` in LAPACK layout."""
    n, dx = grid.n, grid.dx
    nf = n - 1
    p = params.p
    cp = c_p(params)
    gabs = np.abs(g)
    p11, p12, p21, p22 = (face_average(q) for q in mobilities(f, g, params))
    q = cp * face_average(gabs ** (p + 2.0)) * _thinning_slope(ff.h3, p)

    # coefficient multiplying the face third-difference stencil, per (flux, field)
    k_ff = p11 + p12
    k_fg = p12
    k_hf = p21 + p22 + q
    k_hg = p22 + q
    stencil = _STENCIL / dx**3
    local = {
        ("f", "f"): k_ff[:, None] * stencil,
        ("f", "g"): k_fg[:, None] * stencil,
        ("g", "f"): (k_hf - k_ff)[:, None] * stencil,
        ("g", "g"): (k_hg - k_fg)[:, None] * stencil,
    }

    if with_mobility_terms:
        (a11, a12, a21, a22), (b11, b12, b21, b22) = mobility_gradients(f, g, params)
        thin_g = cp * (p + 2.0) * gabs ** (p + 1.0) * np.sign(g)
        f3, h3 = ff.f3, ff.h3
        for offset, node in ((1, slice(0, nf)), (2, slice(1, n))):
            m_ff = 0.5 * (f3 * a11[node] + h3 * a12[node])
            m_fg = 0.5 * (f3 * b11[node] + h3 * b12[node])
            m_hf = 0.5 * (f3 * a21[node] + h3 * a22[node])
            m_hg = 0.5 * (f3 * b21[node] + h3 * b22[node] + phi(h3, p) * thin_g[node])
            local[("f", "f")][:, offset] += m_ff
            local[("f", "g")][:, offset] += m_fg
            local[("g", "f")][:, offset] += m_hf - m_ff
            local[("g", "g")][:, offset] += m_hg - m_fg

    faces = np.arange(nf)
    cols_node = faces[:, None] + np.arange(-1, 3)[None, :]
    cols_node = np.where(cols_node < 0, -cols_node, cols_node)
    cols_node = np.where(cols_node > n - 1, 2 * (n - 1) - cols_node, cols_node)
    w = grid.weights

    rows, cols, vals = [], [], []
    for (a, b), block in local.items():
        ia = 0 if a == "f" else 1
        ib = 0 if b == "f" else 1
        col = 2 * cols_node + ib
        # face k adds +J_k to node k and -J_k to node k+1
        rows.append(np.broadcast_to((2 * faces + ia)[:, None], block.shape))
        cols.append(col)
        vals.append(dt / w[faces][:, None] * block)
        rows.append(np.broadcast_to((2 * (faces + 1) + ia)[:, None], block.shape))
        cols.append(col)
        vals.append(-dt / w[faces + 1][:, None] * block)
    rows = np.concatenate([r.ravel() for r in rows])
    cols = np.concatenate([c.ravel() for c in cols])
    vals = np.concatenate([v.ravel() for v in vals])

    size = 2 * n
    band_row = _BANDS + rows - cols
    ab = np.bincount(band_row * size + cols, weights=vals, minlength=(2 * _BANDS + 1) * size)
    ab = ab.reshape(2 * _BANDS + 1, size)
    ab[_BANDS] += 1.0
    return ab


def _interleave(f, g):
    out = np.empty(2 * f.size)
    out[0::2] = f
    out[1::2] = g
    return out


def _restore_mass(values, target, grid):
    # the exact Newton/linear update preserves trapezoid mass; LU roundoff on a
    # stiff matrix does not quite, so shift by the (roundoff-sized) defect
    defect = target - integrate(values, grid)
    return values + defect / grid.length


def _residual(f, g, f_old, g_old, params, grid, dt):
    ff = face_fluxes(f, g, params, grid)
    r_f = f - f_old + dt * _flux_difference(ff.j_f, grid)
    r_g = g - g_old + dt * _flux_difference(ff.j_g, grid)
    return ff, r_f, r_g


def _classify(state, dt, iterations, config):
    if not state.is_finite:
        return StepOutcome(state, Status.STEP_FAILURE, dt, iterations, "nonfinite values")
    floor = 0.0 if config is None or config.rupture_floor is None else config.rupture_floor
    low = min(state.f.min(), state.g.min())
    if low <= floor:
        return StepOutcome(state, Status.RUPTURE, dt, iterations, f"min height {low:.3e} <= {floor:.3e}")
    cap = None if config is None else config.blowup_norm_cap
    if cap is not None and blowup_norm(state, state.grid) > cap:
        return StepOutcome(state, Status.BLOWUP, dt, iterations, "norm cap exceeded")
    return StepOutcome(state, Status.OK, dt, iterations)


def blowup_norm(state, grid):
    """Discrete ``||u||_2 + ||u_xxxx||_2`` of both heights (trapezoid weights)."""
    w = grid.weights
    low = np.sqrt(np.sum(w * (state.f**2 + state.g**2)))
    high = np.sqrt(np.sum(w * (d4(state.f, grid) ** 2 + d4(state.g, grid) ** 2)))
    return float(low + high)


def _solve(ab, rhs):
    return solve_banded((_BANDS, _BANDS), ab, rhs, check_finite=False)


def step_semi_implicit(state, dt, params, grid, config=None):
    """One linearly implicit step with coefficients frozen at `state`."""
    f_old, g_old = state.f, state.g
    ff, r_f, r_g = _residual(f_old, g_old, f_old, g_old, params, grid, dt)
    ab = _assemble(f_old, g_old, ff, params, grid, dt, with_mobility_terms=False)
    try:
        delta = _solve(ab, -_interleave(r_f, r_g))
    except (LinAlgError, ValueError) as exc:
        return StepOutcome(state, Status.STEP_FAILURE, dt, 1, f"linear solve failed: {exc}")
    f_new = _restore_mass(f_old + delta[0::2], integrate(f_old, grid), grid)
    g_new = _restore_mass(g_old + delta[1::2], integrate(g_old, grid), grid)
    return _classify(State(state.t + dt, f_new, g_new, grid), dt, 1, config)


def step_implicit_newton(state, dt, params, grid, config=None):
    """One backward-Euler step solved by Newton iteration.

    Converged when the residual, or the last Newton correction, is below
    ``newton_tol * (1 + max|u^n|)``. The correction test is needed on fine
    grids: rounding the exact solution to doubles already leaves a residual of
    order ``dt * eps / dx**4``.
    """
    cfg = config or StepConfig()
    f_old, g_old = state.f, state.g
    mass_f, mass_g = integrate(f_old, grid), integrate(g_old, grid)
    tol = cfg.newton_tol * (1.0 + max(np.max(np.abs(f_old)), np.max(np.abs(g_old))))
    f, g = f_old.copy(), g_old.copy()
    for iteration in range(1, cfg.newton_max_iter + 1):
        ff, r_f, r_g = _residual(f, g, f_old, g_old, params, grid, dt)
        if not (np.all(np.isfinite(r_f)) and np.all(np.isfinite(r_g))):
            return StepOutcome(state, Status.STEP_FAILURE, dt, iteration, "nonfinite residual")
        if max(np.max(np.abs(r_f)), np.max(np.abs(r_g))) <= tol:
            return _classify(State(state.t + dt, f, g, grid), dt, iteration, config)
        ab = _assemble(f, g, ff, params, grid, dt, with_mobility_terms=True)
        try:
            delta = _solve(ab, -_interleave(r_f, r_g))
        except (LinAlgError, ValueError) as exc:
            return StepOutcome(state, Status.STEP_FAILURE, dt, iteration, f"linear solve failed: {exc}")
        f = _restore_mass(f + delta[0::2], mass_f, grid)
        g = _restore_mass(g + delta[1::2], mass_g, grid)
        if np.max(np.abs(delta)) <= tol:
            return _classify(State(state.t + dt, f, g, grid), dt, iteration, config)
    return StepOutcome(state, Status.STEP_FAILURE, dt, cfg.newton_max_iter, "Newton did not converge")


_SCHEMES = {"semi_implicit": step_semi_implicit, "implicit_newton": step_implicit_newton}


def advance(state, t_end, config, params, grid, observer: Optional[Callable] = None):
    """Integrate from ``state.t`` to `t_end` with adaptive steps.

    The step is halved after a failed step and grown by 1.2 after five
    consecutive successes, always within ``[dt_min, dt_max]``. Diagnostics are
    recorded every ``config.observe_every`` accepted steps and at the final
    state; `observer`, if given, is called with each record as it is made.

    Returns
    -------
    outcome : StepOutcome
        Final state and status. Rupture and blow-up end the run early; a failed
        step at ``dt_min`` ends it with ``Status.STEP_FAILURE``.
    records : list of DiagnosticsRecord
    """
    from .diagnostics import record

    if not t_end > state.t:
        raise ValueError(f"t_end={t_end!r} must exceed the start time {state.t!r}")
    if state.grid is None:
        state = State(state.t, state.f, state.g, grid)
    step = _SCHEMES[config.scheme]
    if config.rupture_floor is None:
        config = replace(config, rupture_floor=1e-8 * min(state.f.min(), state.g.min()))
    if config.blowup_norm_cap is None:
        config = replace(config, blowup_norm_cap=config.blowup_factor * blowup_norm(state, grid))

    records = []

    def observe(s, dt_used):
        rec = record(s, params, grid, dt=dt_used)
        records.append(rec)
        if observer is not None:
            observer(s, rec)

    observe(state, 0.0)
    dt = config.dt0
    streak = 0
    accepted = 0
    last_dt = 0.0
    span = t_end - state.t
    while True:
        remaining = t_end - state.t
        if remaining <= 1e-13 * span:
            break
        h = remaining if dt >= remaining * (1.0 - 1e-12) else dt
        outcome = step(state, h, params, grid, config)
        if outcome.status is Status.STEP_FAILURE:
            log.debug("step failure at t=%g, dt=%g: %s", state.t, h, outcome.message)
            streak = 0
            dt = 0.5 * h
            if dt < config.dt_min:
                observe(state, last_dt)
                return StepOutcome(state, Status.STEP_FAILURE, h, outcome.iterations, outcome.message), records
            continue
        if outcome.status is Status.RUPTURE and 0.5 * h >= config.dt_min:
            # an under-resolved step can jump far past the floor; only accept a
            # crossing whose overshoot is no larger than the margin it started with
            margin = min(state.f.min(), state.g.min()) - config.rupture_floor
            low = min(outcome.state.f.min(), outcome.state.g.min())
            if config.rupture_floor - low > margin:
                streak = 0
                dt = 0.5 * h
                continue
        if outcome.status is not Status.OK:
            observe(outcome.state, h)
            return outcome, records
        state = outcome.state
        last_dt = h
        accepted += 1
        streak += 1
        if streak >= 5:
            dt = min(dt * 1.2, config.dt_max)
            streak = 0
        dt = max(dt, config.dt_min)
        if accepted % config.observe_every == 0:
            observe(state, h)
    if not records or records[-1].t != state.t:
        observe(state, last_dt)
    return StepOutcome(state, Status.OK, last_dt), records

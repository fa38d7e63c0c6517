"""Uniform node-centred mesh on (0, L) with reflective ghost nodes.

Both endpoints are nodes. Even reflection about each endpoint node
(``v[-1] = v[1]``, ``v[-2] = v[2]``, and likewise on the right) makes every odd
derivative vanish at the boundary. That is how the conditions
``f_x = f_xxx = g_x = g_xxx = 0`` are imposed. Endpoint nodes own half cells,
so trapezoid weights are the natural quadrature and conserved mass.
"""

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Grid",
    "State",
    "ghost_extend",
    "d1",
    "d2",
    "d3",
    "d3_faces",
    "d4",
    "face_average",
    "divergence_of_flux",
    "integrate",
]


@dataclass(frozen=True)
class Grid:
    length: float
    n: int

    def __post_init__(self):
        if not self.length > 0:
            raise ValueError(f"length must be positive, got {self.length!r}")
        if int(self.n) != self.n or self.n < 8:
            raise ValueError(f"n must be an integer >= 8, got {self.n!r}")

    @property
    def dx(self):
        return self.length / (self.n - 1)

    @property
    def x(self):
        return np.linspace(0.0, self.length, self.n)

    @property
    def weights(self):
        """Trapezoid weights (cell widths)."""
        w = np.full(self.n, self.dx)
        w[0] = w[-1] = 0.5 * self.dx
        return w


@dataclass
class State:
    """Film heights on a grid at time t."""

    t: float
    f: np.ndarray
    g: np.ndarray
    grid: Grid = field(repr=False, default=None)

    def __post_init__(self):
        self.f = np.asarray(self.f, dtype=float)
        self.g = np.asarray(self.g, dtype=float)
        if self.f.shape != self.g.shape or self.f.ndim != 1:
            raise ValueError("f and g must be 1-D arrays of equal length")
        if self.grid is not None and self.f.size != self.grid.n:
            raise ValueError(f"state has {self.f.size} nodes, grid has {self.grid.n}")

    def copy(self):
        return State(self.t, self.f.copy(), self.g.copy(), self.grid)

    @property
    def is_finite(self):
        return bool(np.all(np.isfinite(self.f)) and np.all(np.isfinite(self.g)))


def ghost_extend(v, width=2):
    """Pad `v` with `width` evenly reflected ghost nodes on each side."""
    v = np.asarray(v, dtype=float)
    if v.size < width + 2:
        raise ValueError(f"need at least {width + 2} nodes, got {v.size}")
    return np.pad(v, width, mode="reflect")


def d1(v, grid):
    e = ghost_extend(v, 1)
    return (e[2:] - e[:-2]) / (2.0 * grid.dx)


def d2(v, grid):
    e = ghost_extend(v, 1)
    # differences first so that constants give exact zeros
    step = np.diff(e)
    return (step[1:] - step[:-1]) / grid.dx**2


def d3(v, grid):
    """Nodal central third difference."""
    e = ghost_extend(v, 2)
    step = np.diff(e)
    curv = step[1:] - step[:-1]  # dx^2 * d2 at nodes -1..n
    return (curv[2:] - curv[:-2]) / (2.0 * grid.dx**3)


def d3_faces(v, grid):
    """Third difference at the n-1 cell faces, ``(d2[i+1] - d2[i]) / dx``."""
    return np.diff(d2(v, grid)) / grid.dx


def d4(v, grid):
    """Nodal fourth difference, the reflected second difference applied twice."""
    return d2(d2(v, grid), grid)


def face_average(v):
    """Arithmetic mean of neighbouring nodal values, one per face."""
    v = np.asarray(v, dtype=float)
    return 0.5 * (v[1:] + v[:-1])


def divergence_of_flux(j_faces, grid):
    """Nodal rates ``-(J[i+1/2] - J[i-1/2]) / w_i`` with zero flux through x = 0, L.

    `w_i` is the trapezoid weight, so ``sum(w * rate)`` telescopes to zero and
    the trapezoid mass is conserved.
    """
    j = np.asarray(j_faces, dtype=float)
    if j.size != grid.n - 1:
        raise ValueError(f"expected {grid.n - 1} face fluxes, got {j.size}")
    padded = np.concatenate(([0.0], j, [0.0]))
    return -np.diff(padded) / grid.weights


def integrate(v, grid):
    """Trapezoid integral of nodal values, summed with compensated arithmetic."""
    return math.fsum(np.asarray(v, dtype=float) * grid.weights)

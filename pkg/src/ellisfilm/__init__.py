"""Two-layer thin films: a Newtonian film under a shear-thinning Ellis film."""

from .grid import Grid, State
from .rheology import FluidParams

__version__ = "0.1.0"
__all__ = ["FluidParams", "Grid", "State", "__version__"]

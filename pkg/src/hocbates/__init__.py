"""High-order compact finite-difference pricing of European puts under the Bates model."""

from .grid import Grid2D, build_grid
from .model import ModelParams
from .solver import NumericalBlowUp, SolutionSurface, SolverConfig, price_surface

__all__ = [
    "Grid2D", "ModelParams", "NumericalBlowUp", "SolutionSurface", "SolverConfig",
    "build_grid", "price_surface",
]
__version__ = "0.1.0"

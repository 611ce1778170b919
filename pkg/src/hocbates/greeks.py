"""Delta from a priced surface by fourth-order central differences in x."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Grid2D
from .solver import SolutionSurface, write_surface_csv

TRIM = 2


@dataclass(frozen=True)
class DeltaSurface:
    """Delta on the grid with ``TRIM`` columns removed at each x-end; shape (ny, nx - 4)."""

    values: np.ndarray
    grid: Grid2D
    params: object

    @property
    def x(self) -> np.ndarray:
        return self.grid.x[TRIM:-TRIM]

    def at(self, x: float, y: float) -> float:
        """Delta at a node of the trimmed grid."""
        i = self.grid.x_index(x) + self.grid.N - TRIM
        if not 0 <= i < self.values.shape[1]:
            raise ValueError(f"x={x} lies in the trimmed margin")
        return float(self.values[self.grid.y_index(y), i])

    def to_csv(self, path) -> None:
        full = np.full(self.grid.shape, np.nan)
        full[:, TRIM:-TRIM] = self.values
        write_surface_csv(path, self.grid, self.params, {"delta": full}, mask=np.isfinite(full))


def delta_values(V: np.ndarray, grid: Grid2D, strike: float) -> np.ndarray:
    """``(1/S) dV/dx`` with the 5-point stencil; ``V`` has shape ``grid.shape``."""
    if grid.N < 3:
        raise ValueError("delta needs N >= 3")
    V = np.asarray(V, dtype=float).reshape(grid.shape)
    dV = (V[:, :-4] - 8.0 * V[:, 1:-3] + 8.0 * V[:, 3:-1] - V[:, 4:]) / (12.0 * grid.h)
    S = strike * np.exp(grid.x[TRIM:-TRIM])
    return dV / S


def delta_surface(surface: SolutionSurface) -> DeltaSurface:
    return DeltaSurface(delta_values(surface.values(), surface.grid, surface.params.strike),
                        surface.grid, surface.params)

"""Jump integral ``lam * int u(x + z) p(z) dz`` by composite Simpson quadrature.

The integral is taken over the PDE x-grid itself (spacing h). Mass falling left of
the grid is handled by assuming the solution equals the put payoff there; that
tail is integrated once, by Simpson on an adjacent grid of the same length and
spacing. Mass right of the grid multiplies a zero payoff and is dropped.
"""

from __future__ import annotations

from dataclasses import dataclass

import math

import numpy as np

from .grid import Grid2D
from .model import ModelParams, jump_density_logspace, payoff_transformed


def simpson_weights(n: int, spacing: float) -> np.ndarray:
    """Composite Simpson weights ``spacing/3 * (1, 4, 2, ..., 2, 4, 1)`` for ``n`` samples."""
    if n < 3 or n % 2 == 0:
        raise ValueError(f"Simpson's rule needs an odd sample count >= 3, got {n}")
    w = np.full(n, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    return w * (spacing / 3.0)


def simpson_integrate(samples, spacing: float, axis: int = -1):
    samples = np.asarray(samples, dtype=float)
    w = simpson_weights(samples.shape[axis], spacing)
    return np.tensordot(np.moveaxis(samples, axis, -1), w, axes=1)


@dataclass(frozen=True)
class JumpOperator:
    """Dense quadrature matrix in x plus the precomputed left-tail contribution.

    ``weight_matrix[i, c] = lam * simpson_weight(c) * p(x_c - x_i)``, so that row ``i``
    times a row of nodal values integrates against the jump law centred at ``x_i``.
    """

    weight_matrix: np.ndarray
    tail_vector: np.ndarray
    intensity: float
    tail_mass: np.ndarray | None = None  # lam * int_{tail} p(z - x_i) dz
    tail_moment: np.ndarray | None = None  # lam * int_{tail} e^z p(z - x_i) dz
    r: float = 0.0

    def far_field_tail(self, tau: float) -> np.ndarray:
        """Tail contribution when the solution left of the grid is taken to be the
        deep in-the-money transformed value ``e^{lam tau} - e^{(r + lam) tau + x}``."""
        lam = self.intensity
        return math.exp(lam * tau) * self.tail_mass - math.exp((self.r + lam) * tau) * self.tail_moment


def _tail_grid(grid: Grid2D) -> np.ndarray:
    # adjacent grid [x_min - 2 R1, x_min], same spacing; its right end is x_min
    return grid.x - 2.0 * grid.R1


def build_jump_operator(grid: Grid2D, params: ModelParams) -> JumpOperator:
    if grid.N % 2:
        raise ValueError("the x-grid needs an even interval count")
    x = grid.x
    w = simpson_weights(x.size, grid.h)
    lam = params.lam
    W = lam * jump_density_logspace(x[None, :] - x[:, None], params) * w[None, :]
    zeta = _tail_grid(grid)
    wt = simpson_weights(zeta.size, grid.h)
    dens = jump_density_logspace(zeta[None, :] - x[:, None], params)
    tail = lam * dens @ (wt * payoff_transformed(zeta))
    mass = lam * dens @ wt
    moment = lam * dens @ (wt * np.exp(zeta))
    return JumpOperator(W, tail, lam, mass, moment, params.r)


def tail_mass(grid: Grid2D, params: ModelParams) -> np.ndarray:
    """Jump-law mass left of the grid seen from each x node, on the same tail quadrature."""
    zeta = _tail_grid(grid)
    wt = simpson_weights(zeta.size, grid.h)
    return jump_density_logspace(zeta[None, :] - grid.x[:, None], params) @ wt


def apply_jump(u_level: np.ndarray, op: JumpOperator, grid: Grid2D, tail: np.ndarray | None = None) -> np.ndarray:
    """Evaluate the jump integral row by row in x; accepts a (ny, nx) field or a flat vector.

    ``tail`` overrides the precomputed payoff tail (see :meth:`JumpOperator.far_field_tail`).
    """
    u = np.asarray(u_level, dtype=float)
    flat = u.ndim == 1
    if u.size != grid.size:
        raise ValueError(f"expected {grid.size} nodal values, got {u.size}")
    U = u.reshape(grid.shape)
    out = U @ op.weight_matrix.T + (op.tail_vector if tail is None else tail)[None, :]
    return out.ravel() if flat else out

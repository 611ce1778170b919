"""Uniform tensor grid in (x, y) plus a uniform time discretisation."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

_TOL = 1e-9


def _as_count(extent: float, h: float, what: str) -> int:
    n = extent / h
    m = round(n)
    if m <= 0 or abs(n - m) > _TOL * max(1.0, abs(n)):
        raise ValueError(f"{what}={extent} is not a positive integer multiple of h={h}")
    return int(m)


@dataclass(frozen=True)
class Grid2D:
    """Nodes x_i = i*h (i = -N..N) and y_j = L2 + j*h (j = 0..M); time levels n*k."""

    R1: float
    L2: float
    R2: float
    h: float
    N: int
    M: int
    k: float
    n_steps: int
    parabolic_ratio: float
    maturity: float

    @property
    def nx(self) -> int:
        return 2 * self.N + 1

    @property
    def ny(self) -> int:
        return self.M + 1

    @property
    def size(self) -> int:
        return self.nx * self.ny

    @property
    def shape(self) -> tuple[int, int]:
        """Array shape of a nodal field, rows indexed by j (y) and columns by i (x)."""
        return (self.ny, self.nx)

    @cached_property
    def x(self) -> np.ndarray:
        return np.arange(-self.N, self.N + 1) * self.h

    @cached_property
    def y(self) -> np.ndarray:
        return self.L2 + np.arange(self.M + 1) * self.h

    def node_index(self, i: int, j: int) -> int:
        if not (-self.N <= i <= self.N and 0 <= j <= self.M):
            raise IndexError(f"node ({i}, {j}) outside [-{self.N}, {self.N}] x [0, {self.M}]")
        return j * self.nx + (i + self.N)

    def node_from_index(self, idx: int) -> tuple[int, int]:
        if not 0 <= idx < self.size:
            raise IndexError(f"linear index {idx} outside [0, {self.size})")
        j, col = divmod(idx, self.nx)
        return col - self.N, j

    def x_index(self, x: float) -> int:
        """Signed x-index of the node at ``x``; raises if ``x`` is not a node."""
        return _node_offset(x + self.R1, self.h, 2 * self.N, "x") - self.N

    def y_index(self, y: float) -> int:
        return _node_offset(y - self.L2, self.h, self.M, "y")

    def nests_in(self, fine: "Grid2D") -> bool:
        """True if every node of this grid is also a node of ``fine``."""
        ratio = self.h / fine.h
        return (
            abs(ratio - round(ratio)) < _TOL * ratio
            and math.isclose(self.R1, fine.R1, rel_tol=1e-12)
            and math.isclose(self.L2, fine.L2, rel_tol=1e-12)
            and math.isclose(self.R2, fine.R2, rel_tol=1e-12)
        )


def _node_offset(offset: float, h: float, upper: int, axis: str) -> int:
    n = offset / h
    m = round(n)
    if abs(n - m) > 1e-7 or not 0 <= m <= upper:
        raise ValueError(f"{axis}={offset} does not fall on a grid node")
    return int(m)


def build_grid(
    R1: float = 4.0,
    L2: float = 0.1,
    R2: float = 3.3,
    h: float = 0.1,
    parabolic_ratio: float = 0.4,
    maturity: float = 0.5,
) -> Grid2D:
    if h <= 0:
        raise ValueError("h must be positive")
    if L2 <= 0:
        raise ValueError("L2 must be positive: the coefficients divide by y")
    if R2 <= L2:
        raise ValueError("R2 must exceed L2")
    if parabolic_ratio <= 0:
        raise ValueError("parabolic_ratio must be positive")
    if maturity <= 0:
        raise ValueError("maturity must be positive")
    N = _as_count(R1, h, "R1")
    M = _as_count(R2 - L2, h, "R2-L2")
    if N % 2:
        raise ValueError(f"N={N} must be even so Simpson panels tile the x-axis")
    if M < 4:
        raise ValueError("need at least 5 nodes in y for the boundary extrapolation")
    # k is shrunk so the final level lands exactly on the maturity.
    n_steps = math.ceil(maturity / (parabolic_ratio * h * h) - 1e-9)
    k = maturity / n_steps
    return Grid2D(
        R1=N * h, L2=L2, R2=L2 + M * h, h=h, N=N, M=M, k=k, n_steps=n_steps,
        parabolic_ratio=parabolic_ratio, maturity=maturity,
    )

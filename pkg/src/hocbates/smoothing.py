"""Fourth-order smoothing of the put payoff.

The kernel is defined by its Fourier transform

    phi4_hat(w) = (sin(w/2) / (w/2))**4 * (1 + 2/3 * sin(w/2)**2).

The first factor is the transform of the centred cubic B-spline B3 and
``1 + 2/3 sin^2(w/2) = 4/3 - 1/3 cos(w)``, so in real space

    phi4(s) = 4/3 B3(s) - 1/6 (B3(s - 1) + B3(s + 1)),

a piecewise cubic supported on [-3, 3] with small negative lobes.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .grid import Grid2D
from .jump import simpson_weights
from .model import ModelParams, payoff_transformed

SUPPORT = 3.0
QUAD_POINTS = 61


def phi4_hat(omega):
    w = np.asarray(omega, dtype=float)
    half = 0.5 * w
    sinc = np.sinc(half / np.pi)  # sin(w/2) / (w/2), equal to 1 at w = 0
    out = sinc**4 * (1.0 + (2.0 / 3.0) * np.sin(half) ** 2)
    return out if out.ndim else float(out)


def _bspline3(s):
    a = np.abs(s)
    out = np.where(a < 2.0, (2.0 - a) ** 3, 0.0)
    return (out - np.where(a < 1.0, 4.0 * (1.0 - a) ** 3, 0.0)) / 6.0


def phi4_kernel(s):
    s = np.asarray(s, dtype=float)
    out = (4.0 / 3.0) * _bspline3(s) - (_bspline3(s - 1.0) + _bspline3(s + 1.0)) / 6.0
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class SmoothingKernel:
    """Kernel samples on the Simpson nodes of [-3, 3] (in units of h) and their weights."""

    nodes: np.ndarray
    values: np.ndarray
    weights: np.ndarray
    spacing: float


@lru_cache(maxsize=None)
def smoothing_kernel(points: int = QUAD_POINTS) -> SmoothingKernel:
    nodes = np.linspace(-SUPPORT, SUPPORT, points)
    spacing = 2 * SUPPORT / (points - 1)
    return SmoothingKernel(nodes, phi4_kernel(nodes), simpson_weights(points, spacing), spacing)


def smooth_payoff_1d(x, h: float, kernel: SmoothingKernel | None = None) -> np.ndarray:
    """``int phi4(s) u0(x - h s) ds`` at each point of ``x``."""
    kern = kernel or smoothing_kernel()
    x = np.asarray(x, dtype=float)
    samples = payoff_transformed(x[..., None] - h * kern.nodes)
    return samples @ (kern.values * kern.weights)


def smooth_initial(grid: Grid2D, params: ModelParams | None = None, method: str = "1d") -> np.ndarray:
    """Smoothed payoff on every node, shape ``grid.shape``.

    The payoff does not depend on y, so the y-convolution only contributes the
    kernel mass; ``method="2d"`` evaluates the full tensor-product quadrature
    instead, as a cross-check of that reduction.
    """
    kern = smoothing_kernel()
    if method == "1d":
        row = smooth_payoff_1d(grid.x, grid.h, kern)
        return np.broadcast_to(row, grid.shape).copy()
    if method != "2d":
        raise ValueError(f"unknown method {method!r}")
    q = kern.values * kern.weights
    # the double sum over both kernel arguments, without factoring out the y-mass
    u0 = payoff_transformed(grid.x[:, None] - grid.h * kern.nodes[None, :])
    row = np.einsum("im,m,n->i", u0, q, q)
    return np.broadcast_to(row, grid.shape).copy()

"""Nine-point compact stencils and sparse operator assembly.

Node layout of a stencil centred at (i, j)::

    6 2 5        (i-1,j+1) (i,j+1) (i+1,j+1)
    3 0 1        (i-1,j)   (i,j)   (i+1,j)
    7 4 8        (i-1,j-1) (i,j-1) (i+1,j-1)

The elliptic operator discretised here is

    -vy/2 (u_xx + u_yy) - rho v y u_xy - (r - vy/2 - lam*xi_B) u_x
        - kappa (theta - vy)/v u_y = f,

and the compact scheme reads ``sum(alpha[l] u_l) = sum(gamma[l] f_l)``. The
coefficient lists keep the usual closed-form grouping term by term. Where those
lists are inconsistent with the scheme they describe, the corrected term is marked
``# fix:``; every correction is pinned by ``tests/test_stencil.py``, which rebuilds
the scheme independently from the differentiated equation.

In all lists ``xi`` stands for the drift compensator ``lam * xi_B``: the operator
only ever sees ``r - lam*xi_B``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .grid import Grid2D
from .model import ModelParams, xi_B

SCHEMES = ("hoc", "second_order")
JUMP_WEIGHTINGS = ("gamma", "zeta")

# (di, dj) offset of stencil node l
OFFSETS = ((0, 0), (1, 0), (0, 1), (-1, 0), (0, -1), (1, 1), (-1, 1), (-1, -1), (1, -1))

# u_{i,0} = 4u_{i,1} - 6u_{i,2} + 4u_{i,3} - u_{i,4}, written as a homogeneous row
EXTRAPOLATION = np.array([1.0, -4.0, 6.0, -4.0, 1.0])

StencilCoeffs = np.ndarray
"""Nine stencil values, axis 0 indexed by the node layout above (trailing axes follow y)."""


def _constants(params: ModelParams):
    xi = params.lam * xi_B(params)
    return params.r, params.kappa, params.theta, params.vol_of_vol, params.rho, xi


def _check_y(y):
    y = np.asarray(y, dtype=float)
    if np.any(y <= 0):
        raise ValueError("stencil coefficients need y > 0 (they divide by y)")
    return y


def _stack(c0, c13, c24, c57, c68, y):
    """Assemble the nine values from the paired (upper sign, lower sign) families."""
    shape = np.shape(y)
    vals = [c0, c13(1), c24(1), c13(-1), c24(-1), c57(1), c68(1), c57(-1), c68(-1)]
    return np.stack([np.broadcast_to(np.asarray(c, dtype=float), shape) for c in vals])


def elliptic_coeffs(y, h: float, params: ModelParams) -> tuple[StencilCoeffs, StencilCoeffs]:
    """Return ``(alpha, gamma)`` of the fourth-order compact scheme at rows ``y``."""
    y = _check_y(y)
    r, kap, th, v, rho, xi = _constants(params)

    a0 = (
        ((4 * kap**2 + v**2) / (12 * v) - v * (2 * rho**2 - 5) / (3 * h**2)) * y
        - (2 * kap**2 * th + kap * v**2 + r * v**2 - v**2 * xi) / (3 * v**2)
        + (-r * rho * v**3 + rho * v**3 * xi + kap**2 * th**2 + r**2 * v**2
           - 2 * r * v**2 * xi - v**4 + v**2 * xi**2) / (3 * v**3 * y)
    )

    def a13(s):
        return (
            # fix: listed as "(2 kappa rho +- v)"; the 2 kappa rho term must flip sign too
            (-v / 24 + (-s * 2 * kap * rho + s * v) / (6 * h) + v * (rho - 1) * (rho + 1) / (3 * h**2)) * y
            - s * kap * h / 24 + kap / 12 + r / 6 - xi / 6
            + s * (kap * rho * th - r * v + v * xi) / (3 * v * h)
            + (s * (kap * th - v**2) * h / (24 * v)
               - (-2 * r * rho * v + 2 * rho * v * xi + kap * th + 2 * r**2 - 4 * r * xi - v**2 + 2 * xi**2)
               / (12 * v)) / y
        )

    def a24(s):
        return (
            # fix: listed as "+kappa^2/(6v)"; with it the alphas do not sum to zero
            (-kap**2 / (6 * v) + (-s * rho * v + s * 2 * kap) / (6 * h) + v * (rho - 1) * (rho + 1) / (3 * h**2)) * y
            - s * kap**2 * h / (12 * v) + kap * (4 * kap * th + v**2) / (12 * v**2)
            # fix: listed as without the -/+ sign pair
            - s * (-r * rho * v + rho * v * xi + kap * th) / (3 * v * h)
            # fix: listed as without the +/- sign pair on the O(h) term
            + (s * kap * (kap * th - v**2) * h / (12 * v**2)
               - (2 * kap * th + v**2) * (kap * th - v**2) / (12 * v**3)) / y
        )

    def a57(s):
        return (
            (-kap / 24 + s * (2 * rho + 1) * (2 * kap + v) / (24 * h)
             - v * (rho + 1) * (2 * rho + 1) / (12 * h**2)) * y
            + kap * (rho * v + 2 * r + th - 2 * xi) / (24 * v)
            - s * (2 * rho + 1) * (kap * th + r * v - v * xi) / (12 * v * h)
            - (-rho * v**3 + 2 * kap * r * th - 2 * kap * th * xi - r * v**2 + v**2 * xi) / (24 * v**2 * y)
        )

    def a68(s):
        return (
            (kap / 24 - s * (2 * rho - 1) * (2 * kap - v) / (24 * h)
             - v * (2 * rho - 1) * (rho - 1) / (12 * h**2)) * y
            - kap * (rho * v + 2 * r + th - 2 * xi) / (24 * v)
            + s * (2 * rho - 1) * (kap * th - r * v + v * xi) / (12 * v * h)
            + (-rho * v**3 + 2 * kap * r * th - 2 * kap * th * xi - r * v**2 + v**2 * xi) / (24 * v**2 * y)
        )

    def g13(s):
        return 1 / 12 - s * h / 24 + s * (-rho * v + r - xi) * h / (12 * v * y)

    def g24(s):
        return 1 / 12 - s * kap * h / (12 * v) + s * (kap * th - v**2) * h / (12 * v**2 * y)

    alpha = _stack(a0, a13, a24, a57, a68, y)
    gamma = _stack(
        2 / 3, g13, g24,
        lambda s: rho / 24,
        lambda s: -rho / 24,
        y,
    )
    return alpha, gamma


def parabolic_scale(y, h: float, params: ModelParams):
    """Common row factor of the closed-form beta/zeta lists relative to (gamma, alpha)."""
    return 24.0 * params.vol_of_vol**3 * np.asarray(y, dtype=float) * h**2


def parabolic_coeffs(y, h: float, k: float, mu: float, params: ModelParams) -> tuple[StencilCoeffs, StencilCoeffs]:
    """Return ``(beta, zeta)`` of the fully discrete theta-scheme, in the closed-form scaling.

    ``sum(beta[l] u_l^{n+1}) = sum(zeta[l] u_l^n)``; up to the row factor
    :func:`parabolic_scale` this is ``beta = gamma + mu*k*alpha`` and
    ``zeta = gamma - (1-mu)*k*alpha``.
    """
    y = _check_y(y)
    if not 0.0 <= mu <= 1.0:
        raise ValueError("mu must lie in [0, 1]")
    r, kap, th, v, rho, xi = _constants(params)
    mk = mu * k
    om = (1.0 - mu) * k

    b0 = (
        (((2 * y**2 - 8) * v**4
          # fix: listed as "(8r + 8 xi) rho"
          + ((-8 * kap - 8 * r + 8 * xi) * y - (8 * r - 8 * xi) * rho) * v**3
          # fix: listed as "+ 8 xi" (must be xi squared)
          + (8 * kap**2 * y**2 + 8 * r**2 - 16 * r * xi + 8 * xi**2) * v**2
          - 16 * kap**2 * th * v * y + 8 * kap**2 * th**2) * mk
         + 16 * v**3 * y) * h**2
        # fix: listed as "(16 rho^2 + 40)"
        + (40 - 16 * rho**2) * y**2 * v**4 * mk
    )

    def b13(s):
        return (
            s * ((kap * th * v**2 - v**4 - kap * y * v**3) * mk - (y + 2 * rho) * v**3 + 2 * v**2 * r - 2 * v**2 * xi) * h**3
            + ((((-y**2 + 2) * v**4 + ((4 * r - 4 * xi + 2 * kap) * y + 4 * rho * r - 4 * rho * xi) * v**3
                 # fix: listed as "- 4 xi^2 + 8 r xi"; the bracket is 2 kappa theta + 4 (r - xi)^2
                 - (2 * kap * th + 4 * r**2 + 4 * xi**2 - 8 * r * xi) * v**2) * mk
                + 2 * v**3 * y) * h**2)
            + s * (4 * v**4 * y**2 + (-8 * y**2 * kap * rho - 8 * y * r + 8 * y * xi) * v**3
                   + 8 * y * kap * th * rho * v**2) * mk * h
            + (8 * rho**2 - 8) * y**2 * v**4 * mk
        )

    def b24(s):
        return (
            s * ((2 * kap**2 * th * v - 2 * kap**2 * v**2 * y - 2 * v**3 * kap) * mk
                 - 2 * v**2 * y * kap + 2 * v * kap * th - 2 * v**3) * h**3
            + ((2 * v**4 + 2 * kap * y * v**3 + (-4 * kap**2 * y**2 + 2 * kap * th) * v**2
                # fix: listed as "8 kappa^2 v y" (theta missing)
                + 8 * kap**2 * th * v * y - 4 * kap**2 * th**2) * mk + 2 * v**3 * y) * h**2
            + s * ((8 * y**2 * kap + 8 * y * rho * r - 8 * y * rho * xi) * v**3
                   - 4 * v**4 * y**2 * rho - 8 * v**2 * y * kap * th) * mk * h
            + (8 * rho**2 - 8) * y**2 * v**4 * mk
        )

    def b57(s):
        return (
            ((v**4 * rho + (-y**2 * kap + kap * y * rho + r - xi) * v**3 + (th + 2 * r - 2 * xi) * kap * y * v**2
              - 2 * r * kap * th * v + 2 * xi * kap * th * v) * mk + v**3 * rho * y) * h**2
            + s * ((2 * rho + 1) * y**2 * v**4
                   + ((2 + 4 * rho) * kap * y**2 + (-2 * r + 2 * xi - 4 * rho * r + 4 * rho * xi) * y) * v**3
                   + (-4 * th * rho - 2 * th) * kap * y * v**2) * mk * h
            + (-4 * rho**2 - 6 * rho - 2) * y**2 * v**4 * mk
        )

    def b68(s):
        return (
            ((-v**4 * rho + (y**2 * kap - kap * y * rho - r + xi) * v**3 + (-th - 2 * r + 2 * xi) * kap * y * v**2
              + 2 * r * kap * th * v - 2 * xi * kap * th * v) * mk - v**3 * rho * y) * h**2
            + s * ((2 * rho - 1) * y**2 * v**4
                   + ((2 - 4 * rho) * kap * y**2 + (2 * r - 2 * xi - 4 * rho * r + 4 * rho * xi) * y) * v**3
                   + (4 * th * rho - 2 * th) * kap * y * v**2) * mk * h
            + (-4 * rho**2 + 6 * rho - 2) * y**2 * v**4 * mk
        )

    z0 = 16 * v**3 * y * h**2 + om * (
        ((8 - 2 * y**2) * v**4 + ((8 * kap + 8 * r - 8 * xi) * y + 8 * rho * r - 8 * rho * xi) * v**3
         + (-8 * r**2 - 8 * xi**2 + 16 * r * xi - 8 * kap**2 * y**2) * v**2
         + 16 * kap**2 * th * v * y - 8 * kap**2 * th**2) * h**2
        + (-40 + 16 * rho**2) * y**2 * v**4
    )

    def z13(s):
        return (
            s * (2 * r - 2 * xi - (y + 2 * rho) * v) * v**2 * h**3 + 2 * v**3 * y * h**2
            + om * (
                s * (v * kap * y + v**2 - kap * th) * v**2 * h**3
                # fix: listed as "(4r + 4 xi + 2 kappa)", "4r^2 + 4 xi^2" without "- 8 r xi",
                # and "+ 2 v y" where "- 2 v^2" belongs
                + (v**2 * y**2 - (4 * r - 4 * xi + 2 * kap) * v * y + 4 * r**2 + 4 * xi**2 - 8 * r * xi
                   + 2 * kap * th - 2 * v**2 - 4 * rho * v * r + 4 * rho * v * xi) * v**2 * h**2
                + s * ((-4 * v + 8 * kap * rho) * v**3 * y**2 + (-8 * kap * th * rho + 8 * v * r - 8 * v * xi) * v**2 * y) * h
                + (8 * v**2 - 8 * v**2 * rho**2) * v**2 * y**2
            )
        )

    def z24(s):
        return (
            s * (2 * v * kap * th - 2 * v**2 * y * kap - 2 * v**3) * h**3 + 2 * v**3 * y * h**2
            + om * (
                # fix: listed as "+-(v kappa y + v^2 - kappa theta) v^2" (copied from the 1,3 pair);
                # the consistent term mirrors beta_{2,4}
                -s * (2 * kap**2 * th * v - 2 * kap**2 * v**2 * y - 2 * v**3 * kap) * h**3
                # fix: listed as "(v^2 y^2 - (4r + 2 kappa) v y + 2 kappa theta (2 kappa theta - v^2) - 2 v^4)";
                # the consistent term mirrors beta_{2,4}
                - (2 * v**4 + 2 * kap * y * v**3 + (-4 * kap**2 * y**2 + 2 * kap * th) * v**2
                   + 8 * kap**2 * th * v * y - 4 * kap**2 * th**2) * h**2
                # fix: the rho*xi term of the O(h) bracket was missing
                + s * ((-8 * v**3 * kap + 4 * v**4 * rho) * y**2
                       + (8 * kap * th * v**2 - 8 * v**3 * rho * r + 8 * v**3 * rho * xi) * y) * h
                + (-8 * v**4 * rho**2 + 8 * v**4) * y**2
            )
        )

    def z57(s):
        return v**3 * rho * y * h**2 + om * (
            ((v**3 * y**2 * kap - v * (v * kap * th + 2 * r * kap * v - 2 * xi * kap * v + kap * v**2 * rho) * y)
             # fix: listed as "- 2 v^2 xi"
             - v * (v**2 * r - v**2 * xi - 2 * r * kap * th + 2 * xi * kap * th + v**3 * rho))
            * h**2
            + s * (-v * (2 * v**3 * rho + v**3 + 4 * kap * v**2 * rho + 2 * v**2 * kap) * y**2
                   # fix: listed as "+ 4 v^2 rho xi ... + 2 v^2 xi" (xi signs flipped)
                   + v * (2 * v * kap * th + 4 * v * kap * th * rho + 4 * v**2 * rho * r - 4 * v**2 * rho * xi
                          + 2 * v**2 * r - 2 * v**2 * xi) * y) * h
            + v * (2 * v**3 + 6 * v**3 * rho + 4 * v**3 * rho**2) * y**2
        )

    def z68(s):
        return -v**3 * rho * y * h**2 + om * (
            # fix: the h^2 factor of this group was missing
            (-v**3 * y**2 * kap + v * (v * kap * th + 2 * r * kap * v - 2 * xi * kap * v + kap * v**2 * rho) * y
             + v * (v**2 * r - v**2 * xi - 2 * r * kap * th + 2 * xi * kap * th + v**3 * rho)) * h**2
            + s * (v * (-2 * v**3 * rho + v**3 + 4 * kap * v**2 * rho - 2 * v**2 * kap) * y**2
                   # fix: listed as "- 2 v^2 xi"
                   + v * (2 * v * kap * th - 4 * v * kap * th * rho + 4 * v**2 * rho * r - 4 * v**2 * rho * xi
                          - 2 * v**2 * r + 2 * v**2 * xi) * y) * h
            + v * (2 * v**3 - 6 * v**3 * rho + 4 * v**3 * rho**2) * y**2
        )

    beta = _stack(b0, b13, b24, b57, b68, y)
    zeta = _stack(z0, z13, z24, z57, z68, y)
    return beta, zeta


def second_order_elliptic(y, h: float, params: ModelParams) -> StencilCoeffs:
    """Central-difference row of the elliptic operator (the cross term uses the corners)."""
    y = _check_y(y)
    r, kap, th, v, rho, xi = _constants(params)
    a = 0.5 * v * y
    b = rho * v * y
    c = r - xi - 0.5 * v * y
    d = kap * (th - v * y) / v
    h2 = h * h
    corner = b / (4 * h2)
    vals = [
        4 * a / h2,
        -a / h2 - c / (2 * h),
        -a / h2 - d / (2 * h),
        -a / h2 + c / (2 * h),
        -a / h2 + d / (2 * h),
        -corner, corner, -corner, corner,
    ]
    return np.stack([np.broadcast_to(np.asarray(w, dtype=float), y.shape) for w in vals])


def second_order_coeffs(y, h: float, k: float, theta_weight: float, params: ModelParams):
    """Return ``(lhs_row, rhs_row)`` of the theta-weighted central scheme."""
    if not 0.0 <= theta_weight <= 1.0:
        raise ValueError("theta_weight must lie in [0, 1]")
    A = second_order_elliptic(y, h, params)
    ident = np.zeros_like(A)
    ident[0] = 1.0
    return ident + theta_weight * k * A, ident - (1.0 - theta_weight) * k * A


@dataclass(frozen=True)
class StencilOperators:
    """Implicit (``lhs``) and explicit (``rhs``) step matrices over all nodes.

    ``rhs_weights`` maps a nodal source (the jump integral) onto the right-hand
    side; its boundary rows are zero. ``dirichlet`` and ``extrapolated`` are the
    linear indices of the x-boundary rows (identity in ``lhs``) and of the
    y-boundary rows (extrapolation relations in ``lhs``).
    """

    lhs: sp.csc_matrix
    rhs: sp.csr_matrix
    rhs_weights: sp.csr_matrix
    dirichlet: np.ndarray
    extrapolated: np.ndarray
    scheme: str
    k: float


def _interior_index(grid: Grid2D):
    jj, ii = np.meshgrid(np.arange(1, grid.M), np.arange(1, grid.nx - 1), indexing="ij")
    return jj, ii


def _stencil_matrix(grid: Grid2D, coeffs: np.ndarray) -> sp.coo_matrix:
    """Scatter per-row stencils ``coeffs`` (shape (9, M-1)) into an all-node matrix (interior rows only)."""
    jj, ii = _interior_index(grid)
    nx = grid.nx
    rows = (jj * nx + ii).ravel()
    r_all, c_all, v_all = [], [], []
    for l, (di, dj) in enumerate(OFFSETS):
        w = np.broadcast_to(coeffs[l][:, None], jj.shape).ravel()
        r_all.append(rows)
        c_all.append(((jj + dj) * nx + ii + di).ravel())
        v_all.append(w)
    return sp.coo_matrix(
        (np.concatenate(v_all), (np.concatenate(r_all), np.concatenate(c_all))),
        shape=(grid.size, grid.size),
    )


def boundary_rows(grid: Grid2D) -> tuple[np.ndarray, np.ndarray]:
    """Linear indices of (Dirichlet rows, extrapolated rows); corners count as Dirichlet."""
    nx = grid.nx
    j = np.arange(grid.ny)
    dirichlet = np.sort(np.concatenate([j * nx, j * nx + nx - 1]))
    i = np.arange(1, nx - 1)
    extrapolated = np.concatenate([i, grid.M * nx + i])
    return dirichlet, extrapolated


def _boundary_matrix(grid: Grid2D) -> sp.coo_matrix:
    nx = grid.nx
    dirichlet, _ = boundary_rows(grid)
    i = np.arange(1, nx - 1)
    rows, cols, vals = [dirichlet], [dirichlet], [np.ones(dirichlet.size)]
    for t, w in enumerate(EXTRAPOLATION):
        rows += [i, grid.M * nx + i]
        cols += [t * nx + i, (grid.M - t) * nx + i]
        vals += [np.full(i.size, w), np.full(i.size, w)]
    return sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(grid.size, grid.size),
    )


def assemble_operators(
    grid: Grid2D,
    params: ModelParams,
    mu: float = 0.5,
    scheme: str = "hoc",
    k: float | None = None,
    jump_weighting: str = "gamma",
) -> StencilOperators:
    """Assemble the step matrices; ``k`` defaults to ``grid.k``.

    Interior HOC rows are the closed-form beta/zeta lists divided by
    :func:`parabolic_scale`, so each row is O(1). ``jump_weighting`` picks the
    averaging applied to the explicit jump term: ``"gamma"`` (consistent with the
    compact scheme's treatment of sources) or ``"zeta"`` (the explicit-side
    stencil itself).
    """
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
    if jump_weighting not in JUMP_WEIGHTINGS:
        raise ValueError(f"unknown jump_weighting {jump_weighting!r}")
    k = grid.k if k is None else k
    y = grid.y[1:-1]
    if scheme == "hoc":
        beta, zeta = parabolic_coeffs(y, grid.h, k, mu, params)
        scale = parabolic_scale(y, grid.h, params)
        lhs_rows, rhs_rows = beta / scale, zeta / scale
        if jump_weighting == "gamma":
            weights = elliptic_coeffs(y, grid.h, params)[1]
        else:
            weights = rhs_rows
    else:
        lhs_rows, rhs_rows = second_order_coeffs(y, grid.h, k, mu, params)
        weights = np.zeros_like(lhs_rows)
        weights[0] = 1.0

    dirichlet, extrapolated = boundary_rows(grid)
    lhs = (_stencil_matrix(grid, lhs_rows) + _boundary_matrix(grid)).tocsc()
    rhs = _stencil_matrix(grid, rhs_rows).tocsr()
    w = _stencil_matrix(grid, weights).tocsr()
    for m in (lhs, rhs, w):
        m.eliminate_zeros()
    return StencilOperators(lhs, rhs, w, dirichlet, extrapolated, scheme, k)


def assemble_elliptic(grid: Grid2D, params: ModelParams, scheme: str = "hoc"):
    """Return ``(A, G)`` with ``A u = G f`` on interior rows and identity rows on the whole boundary.

    Used for Dirichlet manufactured-solution checks of the spatial discretisation.
    """
    y = grid.y[1:-1]
    if scheme == "hoc":
        alpha, gamma = elliptic_coeffs(y, grid.h, params)
    elif scheme == "second_order":
        alpha = second_order_elliptic(y, grid.h, params)
        gamma = np.zeros_like(alpha)
        gamma[0] = 1.0
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    mask = np.ones(grid.shape, dtype=bool)
    mask[1:-1, 1:-1] = False
    b = np.flatnonzero(mask.ravel())
    ident = sp.coo_matrix((np.ones(b.size), (b, b)), shape=(grid.size, grid.size))
    A = (_stencil_matrix(grid, alpha) + ident).tocsc()
    G = _stencil_matrix(grid, gamma).tocsr()
    return A, G


def dump_coo(matrix, path) -> None:
    """Write ``row col value`` lines (0-based) for diffing assembled operators."""
    coo = sp.coo_matrix(matrix)
    order = np.lexsort((coo.col, coo.row))
    with open(path, "w") as fh:
        for r, c, v in zip(coo.row[order], coo.col[order], coo.data[order]):
            fh.write(f"{r} {c} {v:.17g}\n")

"""IMEX Crank-Nicolson time marching for the transformed pricing equation.

The differential part is implicit (one sparse LU factorisation per run, reused at
every step); the jump integral is explicit with the two-level extrapolation
``3/2 J(u^n) - 1/2 J(u^{n-1})``.
"""

from __future__ import annotations

import csv
import logging
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .grid import Grid2D, build_grid
from .jump import JumpOperator, build_jump_operator, apply_jump
from .model import ModelParams, from_transformed, payoff_transformed, value_to_financial
from .smoothing import smooth_initial
from .stencil import EXTRAPOLATION, StencilOperators, assemble_operators

log = logging.getLogger(__name__)

DIRICHLET_MODES = ("classic", "consistent")
TAIL_MODES = ("payoff", "consistent")
IMEX_WEIGHTS = (1.5, -0.5)


class NumericalBlowUp(ArithmeticError):
    """Raised when a time level contains non-finite values."""

    def __init__(self, step: int, count: int):
        super().__init__(f"non-finite values in {count} node(s) after step {step}")
        self.step = step
        self.count = count


class SingularOperatorError(np.linalg.LinAlgError):
    pass


@dataclass
class FactorizationHandle:
    """Reusable sparse LU factorisation; ``count`` is shared by all handles of one run."""

    lu: spla.SuperLU
    counter: list = field(default_factory=lambda: [0])

    @property
    def count(self) -> int:
        return self.counter[0]

    def solve(self, b: np.ndarray) -> np.ndarray:
        return self.lu.solve(b)


def factorize(lhs, counter: list | None = None) -> FactorizationHandle:
    counter = [0] if counter is None else counter
    A = sp.csc_matrix(lhs)
    if A.shape[0] != A.shape[1]:
        raise ValueError(f"lhs must be square, got {A.shape}")
    try:
        lu = spla.splu(A)
    except RuntimeError as exc:
        empty = np.flatnonzero(np.diff(A.tocsr().indptr) == 0)
        zero_diag = np.flatnonzero(A.diagonal() == 0)
        raise SingularOperatorError(
            f"{exc}; empty rows {empty[:10].tolist()}, zero diagonal at {zero_diag[:10].tolist()}"
        ) from exc
    counter[0] += 1
    return FactorizationHandle(lu, counter)


def dirichlet_left(tau: float, grid: Grid2D, params: ModelParams, mode: str = "classic") -> float:
    """Value imposed on the x = -R1 column at time-to-maturity ``tau``."""
    if mode == "classic":
        return -math.expm1(params.r * tau - grid.R1)
    if mode == "consistent":
        return math.exp(params.lam * tau) - math.exp((params.r + params.lam) * tau - grid.R1)
    raise ValueError(f"unknown Dirichlet mode {mode!r}; expected one of {DIRICHLET_MODES}")


def apply_boundaries(u: np.ndarray, tau: float, grid: Grid2D, params: ModelParams, mode: str = "classic") -> np.ndarray:
    """Return a copy of ``u`` with Dirichlet x-boundaries and extrapolated y-boundaries."""
    U = np.array(u, dtype=float).reshape(grid.shape)
    U[0, 1:-1] = EXTRAPOLATION[1:] @ -U[1:5, 1:-1]
    U[-1, 1:-1] = EXTRAPOLATION[1:] @ -U[-2:-6:-1, 1:-1]
    U[:, 0] = dirichlet_left(tau, grid, params, mode)
    U[:, -1] = 0.0
    return U.reshape(np.shape(u))


def step_imex(
    u_n: np.ndarray,
    u_nm1: np.ndarray,
    handle: FactorizationHandle,
    ops: StencilOperators,
    jump: JumpOperator | None,
    grid: Grid2D,
    params: ModelParams,
    tau_next: float,
    dirichlet: str = "classic",
    jump_weights: tuple[float, float] = IMEX_WEIGHTS,
    tail: str = "payoff",
) -> np.ndarray:
    """One implicit-explicit step on flat nodal vectors.

    ``u_n`` sits at ``tau_next - ops.k`` and ``u_nm1`` one step earlier (clamped at 0).
    """
    b = ops.rhs @ u_n
    if jump is not None:
        c0, c1 = jump_weights
        tau_n = tau_next - ops.k
        tails = (None, None)
        if tail == "consistent":
            tails = (jump.far_field_tail(tau_n), jump.far_field_tail(max(tau_n - ops.k, 0.0)))
        elif tail != "payoff":
            raise ValueError(f"unknown tail mode {tail!r}; expected one of {TAIL_MODES}")
        source = c0 * apply_jump(u_n, jump, grid, tails[0])
        if c1:
            source += c1 * apply_jump(u_nm1, jump, grid, tails[1])
        b += ops.rhs_weights @ (ops.k * source)
    b[ops.dirichlet] = 0.0
    b[ops.dirichlet[::2]] = dirichlet_left(tau_next, grid, params, dirichlet)
    b[ops.extrapolated] = 0.0
    return apply_boundaries(handle.solve(b), tau_next, grid, params, dirichlet)


@dataclass(frozen=True)
class SolverConfig:
    params: ModelParams = field(default_factory=ModelParams)
    grid: Grid2D = field(default_factory=build_grid)
    scheme: str = "hoc"
    mu: float = 0.5
    smoothing: bool | None = None  # default: on for hoc, off for second_order
    rannacher: bool | None = None  # default: off for hoc, on for second_order
    transform: str = "consistent"
    dirichlet: str = "classic"
    jump_weighting: str = "gamma"
    tail: str = "payoff"
    include_jump: bool = True

    def __post_init__(self):
        if not 0.0 <= self.mu <= 1.0:
            raise ValueError("mu must lie in [0, 1]")
        if self.scheme not in ("hoc", "second_order"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.dirichlet not in DIRICHLET_MODES:
            raise ValueError(f"unknown Dirichlet mode {self.dirichlet!r}")
        if self.jump_weighting not in ("gamma", "zeta"):
            raise ValueError(f"unknown jump weighting {self.jump_weighting!r}")
        if self.transform not in ("consistent", "paper-literal"):
            raise ValueError(f"unknown transform {self.transform!r}")
        if self.tail not in TAIL_MODES:
            raise ValueError(f"unknown tail mode {self.tail!r}")
        if not math.isclose(self.grid.maturity, self.params.maturity, rel_tol=1e-12):
            raise ValueError("grid and model maturities differ")

    @property
    def use_smoothing(self) -> bool:
        return self.scheme == "hoc" if self.smoothing is None else self.smoothing

    @property
    def use_rannacher(self) -> bool:
        return self.scheme == "second_order" if self.rannacher is None else self.rannacher

    def with_grid(self, **grid_changes) -> "SolverConfig":
        g = self.grid
        kw = dict(R1=g.R1, L2=g.L2, R2=g.R2, h=g.h, parabolic_ratio=g.parabolic_ratio, maturity=g.maturity)
        kw.update(grid_changes)
        return replace(self, grid=build_grid(**kw))

    def with_params(self, **changes) -> "SolverConfig":
        return replace(self, params=self.params.replace(**changes))


@dataclass(frozen=True)
class SolutionSurface:
    """Transformed solution ``u`` (shape ``grid.shape``) at time-to-maturity ``tau``."""

    u: np.ndarray
    grid: Grid2D
    params: ModelParams
    tau: float
    transform: str = "consistent"
    scheme: str = "hoc"
    factorizations: int = 0
    wall_time: float = 0.0

    @property
    def S(self) -> np.ndarray:
        return from_transformed(self.grid.x, self.grid.y, self.params)[0]

    @property
    def sigma(self) -> np.ndarray:
        return from_transformed(self.grid.x, self.grid.y, self.params)[1]

    def values(self) -> np.ndarray:
        """Option values V in currency units on every node."""
        return value_to_financial(self.u, self.tau, self.params, self.transform)

    def value_at(self, S: float, sigma: float) -> float:
        """V at an arbitrary (S, sigma) by fourth-order Lagrange interpolation in (x, y)."""
        x = math.log(S / self.params.strike)
        y = sigma / self.params.vol_of_vol
        return float(interpolate_row(self.values(), self.grid.x, x, axis=1, y_nodes=self.grid.y, y=y))

    def to_csv(self, path) -> None:
        write_surface_csv(path, self.grid, self.params, {"u": self.u, "V": self.values()})


def _lagrange_weights(nodes: np.ndarray, t: float) -> tuple[int, np.ndarray]:
    """Start index and weights of the 4-point Lagrange stencil around ``t``."""
    h = nodes[1] - nodes[0]
    pos = (t - nodes[0]) / h
    if pos < -1e-9 or pos > nodes.size - 1 + 1e-9:
        raise ValueError(f"{t} lies outside [{nodes[0]}, {nodes[-1]}]")
    start = int(np.clip(math.floor(pos) - 1, 0, nodes.size - 4))
    pts = nodes[start:start + 4]
    w = np.ones(4)
    for a in range(4):
        for b in range(4):
            if a != b:
                w[a] *= (t - pts[b]) / (pts[a] - pts[b])
    return start, w


def interpolate_row(values: np.ndarray, x_nodes: np.ndarray, x: float, axis: int = 1,
                    y_nodes: np.ndarray | None = None, y: float | None = None):
    """Cubic (fourth-order) Lagrange interpolation in x, and optionally in y as well."""
    start, w = _lagrange_weights(x_nodes, x)
    along_x = np.tensordot(np.take(values, range(start, start + 4), axis=axis), w, axes=([axis], [0]))
    if y_nodes is None:
        return along_x
    ys, wy = _lagrange_weights(y_nodes, y)
    return along_x[ys:ys + 4] @ wy


def write_surface_csv(path, grid: Grid2D, params: ModelParams, columns: dict[str, np.ndarray],
                      mask: np.ndarray | None = None) -> None:
    """Write ``x,y,S,sigma,<columns>`` row-major over the nodes, 12 significant digits.

    ``path`` may be a filesystem path or an open text stream; ``mask`` selects nodes.
    """
    X, Y = np.meshgrid(grid.x, grid.y)
    S, sigma = from_transformed(X, Y, params)
    names = ["x", "y", "S", "sigma", *columns]
    data = [X, Y, S, sigma, *(np.asarray(c).reshape(X.shape) for c in columns.values())]
    keep = np.ones(X.size, dtype=bool) if mask is None else np.asarray(mask).ravel()
    fh = open(path, "w", newline="") if isinstance(path, (str, bytes)) or hasattr(path, "__fspath__") else None
    out = fh if fh is not None else path
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(names)
        for k, row in zip(keep, zip(*(d.ravel() for d in data))):
            if k:
                w.writerow([f"{v:.12g}" for v in row])
    finally:
        if fh is not None:
            fh.close()


def initial_condition(config: SolverConfig) -> np.ndarray:
    g = config.grid
    if config.use_smoothing:
        return smooth_initial(g, config.params)
    return np.broadcast_to(payoff_transformed(g.x), g.shape).copy()


def _check_finite(u: np.ndarray, step: int) -> None:
    bad = ~np.isfinite(u)
    if bad.any():
        raise NumericalBlowUp(step, int(bad.sum()))


def price_surface(config: SolverConfig) -> SolutionSurface:
    """Run the full pipeline and return the solution at tau = maturity."""
    g, p = config.grid, config.params
    t0 = time.perf_counter()
    counter = [0]
    jump = build_jump_operator(g, p) if config.include_jump else None
    u0 = initial_condition(config).ravel()
    u_prev = u0.copy()  # u^{-1} := u^0 for the first extrapolated jump term
    u = u0
    tau = 0.0
    first = 0
    if config.use_rannacher:
        quarter = g.k / 4.0
        ops_ie = assemble_operators(g, p, mu=1.0, scheme=config.scheme, k=quarter,
                                    jump_weighting=config.jump_weighting)
        handle_ie = factorize(ops_ie.lhs, counter)
        for q in range(4):
            u = step_imex(u, u, handle_ie, ops_ie, jump, g, p, (q + 1) * quarter,
                          config.dirichlet, jump_weights=(1.0, 0.0), tail=config.tail)
        _check_finite(u, 0)
        u_prev, tau, first = u0, g.k, 1
    ops = assemble_operators(g, p, mu=config.mu, scheme=config.scheme, jump_weighting=config.jump_weighting)
    handle = factorize(ops.lhs, counter)
    for n in range(first, g.n_steps):
        tau = (n + 1) * g.k
        u_next = step_imex(u, u_prev, handle, ops, jump, g, p, tau, config.dirichlet, tail=config.tail)
        _check_finite(u_next, n)
        u_prev, u = u, u_next
    elapsed = time.perf_counter() - t0
    log.debug("%s h=%g steps=%d: %.3fs", config.scheme, g.h, g.n_steps, elapsed)
    return SolutionSurface(
        u=u.reshape(g.shape), grid=g, params=p, tau=g.n_steps * g.k, transform=config.transform,
        scheme=config.scheme, factorizations=counter[0], wall_time=elapsed,
    )

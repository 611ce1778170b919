"""Experiment drivers: convergence, stability, Feller regimes and Delta hedging."""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .greeks import TRIM, delta_values
from .solver import NumericalBlowUp, SolutionSurface, SolverConfig, interpolate_row, price_surface

STANDARD_H = (0.4, 0.2, 0.1, 0.05)
FELLER_H = (0.2, 0.1, 0.05)
H_REF = 0.025
STABILITY_RATIOS = tuple(round(0.1 * i, 1) for i in range(1, 11))
FELLER_REGIMES = ((0.04, 0.7), (0.04, 0.4), (0.04, 0.1))  # (theta, vol_of_vol)


def fit_slope(hs, errors) -> float:
    """Least-squares slope of log(error) against log(h); NaN if fewer than two usable points."""
    hs, errors = np.asarray(hs, float), np.asarray(errors, float)
    ok = (errors > 0) & np.isfinite(errors)
    if ok.sum() < 2:
        return float("nan")
    return float(np.polyfit(np.log(hs[ok]), np.log(errors[ok]), 1)[0])


def _stride(coarse_h: float, fine_h: float) -> int:
    s = coarse_h / fine_h
    if abs(s - round(s)) > 1e-9 * s:
        raise ValueError(f"h={coarse_h} is not a multiple of h_ref={fine_h}")
    return int(round(s))


def coincident(coarse, fine, coarse_grid, fine_grid, trim: int = 0) -> np.ndarray:
    """Fine-grid values at the coarse nodes; ``trim`` columns are dropped from each x-end."""
    if not coarse_grid.nests_in(fine_grid):
        raise ValueError("coarse grid does not nest in the reference grid")
    s = _stride(coarse_grid.h, fine_grid.h)
    full = np.asarray(fine).reshape(fine_grid.ny, -1)
    off = trim * s - trim  # trimmed fine columns are offset from trimmed coarse ones
    sub = full[::s, off::s] if trim else full[::s, ::s]
    return sub[:, : np.asarray(coarse).reshape(coarse_grid.ny, -1).shape[1]]


def _norms(e: np.ndarray, h: float) -> tuple[float, float]:
    return float(math.sqrt(h * h * np.sum(e * e))), float(np.max(np.abs(e)))


def error_norms(coarse: SolutionSurface, reference: SolutionSurface) -> tuple[float, float]:
    """(l2, linf) of V_coarse - V_ref at coincident nodes, l2 = sqrt(h^2 sum e^2) with the coarse h."""
    e = coarse.values() - coincident(coarse.values(), reference.values(), coarse.grid, reference.grid)
    return _norms(e, coarse.grid.h)


def delta_error_norms(coarse: SolutionSurface, reference: SolutionSurface) -> tuple[float, float]:
    dc = delta_values(coarse.values(), coarse.grid, coarse.params.strike)
    df = delta_values(reference.values(), reference.grid, reference.params.strike)
    return _norms(dc - coincident(dc, df, coarse.grid, reference.grid, trim=TRIM), coarse.grid.h)


@dataclass
class ErrorRow:
    h: float
    dof: int
    l2_error: float
    linf_error: float
    wall_time: float


@dataclass
class ErrorReport:
    rows: list[ErrorRow]
    h_ref: float
    label: str = ""
    surfaces: dict = field(default_factory=dict, repr=False)
    reference: SolutionSurface | None = field(default=None, repr=False)

    @property
    def hs(self) -> list[float]:
        return [r.h for r in self.rows]

    @property
    def l2_slope(self) -> float:
        return fit_slope(self.hs, [r.l2_error for r in self.rows])

    @property
    def linf_slope(self) -> float:
        return fit_slope(self.hs, [r.linf_error for r in self.rows])

    @property
    def slope_defined(self) -> bool:
        return len(self.rows) >= 2

    def delta_report(self) -> "ErrorReport":
        """Errors of Delta on the trimmed grids against the same reference."""
        rows = []
        for r in self.rows:
            l2, li = delta_error_norms(self.surfaces[r.h], self.reference)
            rows.append(ErrorRow(r.h, r.dof, l2, li, r.wall_time))
        return ErrorReport(rows, self.h_ref, f"{self.label} delta".strip())

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["h", "dof", "l2_error", "linf_error", "wall_time"])
            for r in self.rows:
                w.writerow([f"{r.h:.12g}", r.dof, f"{r.l2_error:.12g}", f"{r.linf_error:.12g}", f"{r.wall_time:.12g}"])
            w.writerow(["slope", "", f"{self.l2_slope:.12g}", f"{self.linf_slope:.12g}", ""])


def _solve(config: SolverConfig) -> SolutionSurface | NumericalBlowUp:
    try:
        return price_surface(config)
    except NumericalBlowUp as exc:
        return exc


def solve_many(configs, workers: int = 1) -> list:
    """Price independent configurations, optionally in separate processes.

    Blow-ups are returned in place of the surface rather than raised.
    """
    configs = list(configs)
    if workers <= 1 or len(configs) <= 1:
        return [_solve(c) for c in configs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_solve, configs))


def _require(result) -> SolutionSurface:
    if isinstance(result, NumericalBlowUp):
        raise result
    return result


def convergence_study(
    config: SolverConfig,
    h_set=STANDARD_H,
    h_ref: float = H_REF,
    reference: SolutionSurface | None = None,
    workers: int = 1,
    label: str = "",
) -> ErrorReport:
    h_set = sorted(h_set, reverse=True)
    configs = [config.with_grid(h=h) for h in h_set]
    ref_grid = config.with_grid(h=h_ref).grid
    for c in configs:
        if not c.grid.nests_in(ref_grid):
            raise ValueError(f"h={c.grid.h} does not nest in h_ref={h_ref}")
    if reference is None:
        configs.append(config.with_grid(h=h_ref))
    results = solve_many(configs, workers)
    if reference is None:
        reference = _require(results.pop())
    rows, surfaces = [], {}
    for h, res in zip(h_set, results):
        surf = _require(res)
        l2, li = error_norms(surf, reference)
        rows.append(ErrorRow(h, surf.grid.size, l2, li, surf.wall_time))
        surfaces[h] = surf
    return ErrorReport(rows, h_ref, label or config.scheme, surfaces, reference)


@dataclass
class StabilityTable:
    ratios: list[float]
    h_set: list[float]
    l2: np.ndarray  # shape (len(ratios), len(h_set)); NaN where the run blew up
    blew_up: np.ndarray

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["ratio", "h", "l2_error", "blew_up"])
            for a, ratio in enumerate(self.ratios):
                for b, h in enumerate(self.h_set):
                    w.writerow([f"{ratio:.12g}", f"{h:.12g}", f"{self.l2[a, b]:.12g}", int(self.blew_up[a, b])])


def stability_sweep(
    config: SolverConfig,
    ratios=STABILITY_RATIOS,
    h_set=STANDARD_H,
    h_ref: float = H_REF,
    reference: SolutionSurface | None = None,
    workers: int = 1,
) -> StabilityTable:
    """l2 error against a ratio-0.4 reference for every (ratio, h); blow-ups are flagged."""
    ratios, h_set = list(ratios), list(h_set)
    if reference is None:
        reference = _require(_solve(config.with_grid(h=h_ref, parabolic_ratio=0.4)))
    configs = [config.with_grid(h=h, parabolic_ratio=q) for q in ratios for h in h_set]
    results = solve_many(configs, workers)
    l2 = np.full((len(ratios), len(h_set)), np.nan)
    flags = np.zeros(l2.shape, dtype=bool)
    for n, res in enumerate(results):
        a, b = divmod(n, len(h_set))
        if isinstance(res, NumericalBlowUp):
            flags[a, b] = True
        else:
            l2[a, b] = error_norms(res, reference)[0]
    return StabilityTable(ratios, h_set, l2, flags)


@dataclass
class FellerResult:
    theta: float
    vol_of_vol: float
    feller: bool
    report: ErrorReport


def feller_study(config: SolverConfig, h_set=FELLER_H, h_ref: float = H_REF, workers: int = 1,
                 regimes=FELLER_REGIMES) -> list[FellerResult]:
    out = []
    for theta, v in regimes:
        cfg = config.with_params(theta=theta, vol_of_vol=v)
        rep = convergence_study(cfg, h_set, h_ref, workers=workers, label=f"theta={theta} v={v}")
        out.append(FellerResult(theta, v, cfg.params.feller_satisfied(), rep))
    return out


def write_feller_csv(results: list[FellerResult], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["theta", "vol_of_vol", "feller", "h", "l2_error", "linf_error", "l2_slope", "linf_slope"])
        for res in results:
            for r in res.report.rows:
                w.writerow([res.theta, res.vol_of_vol, int(res.feller), f"{r.h:.12g}", f"{r.l2_error:.12g}",
                            f"{r.linf_error:.12g}", f"{res.report.l2_slope:.12g}", f"{res.report.linf_slope:.12g}"])


def hedge_portfolio(surface: SolutionSurface, y: float, bump_fraction: float) -> tuple[float, float]:
    """Delta-neutral portfolio P - Delta*S set up at the ATM node of row ``y`` and revalued
    after S -> S(1 + bump) and S -> S(1 - bump); returns (up, down) portfolio values."""
    g, p = surface.grid, surface.params
    V = surface.values()
    j = g.y_index(y)
    row = V[j]
    delta = delta_values(V, g, p.strike)[j, g.N - TRIM]
    out = []
    for sign in (1.0, -1.0):
        S1 = p.strike * (1.0 + sign * bump_fraction)
        x1 = math.log(S1 / p.strike)
        if not g.x[0] <= x1 <= g.x[-1]:
            raise ValueError("bumped asset price leaves the grid")
        out.append(float(interpolate_row(row, g.x, x1, axis=0)) - delta * S1)
    return out[0], out[1]


@dataclass
class HedgeRow:
    h: float
    up_error_pct: float
    down_error_pct: float


@dataclass
class HedgeReport:
    bump_fraction: float
    y: float
    schemes: dict[str, list[HedgeRow]]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["scheme", "h", "up_error_pct", "down_error_pct"])
            for name, rows in self.schemes.items():
                for r in rows:
                    w.writerow([name, f"{r.h:.12g}", f"{r.up_error_pct:.12g}", f"{r.down_error_pct:.12g}"])


def hedge_experiment(
    config: SolverConfig,
    h_set=STANDARD_H,
    bump_fraction: float = 0.005,
    h_ref: float = H_REF,
    y: float | None = None,
    schemes=("hoc", "second_order"),
    studies: dict[str, ErrorReport] | None = None,
    workers: int = 1,
) -> HedgeReport:
    """Percentage hedge-portfolio error of each mesh against the h_ref surface of the same scheme.

    ``y`` defaults to the mean-reversion level theta / vol_of_vol. Precomputed
    convergence studies (with surfaces) can be passed in ``studies``.
    """
    if bump_fraction < 0:
        raise ValueError("bump_fraction must be non-negative")
    y = config.params.theta / config.params.vol_of_vol if y is None else y
    out = {}
    for name in schemes:
        study = (studies or {}).get(name)
        if study is None:
            study = convergence_study(replace(config, scheme=name), h_set, h_ref, workers=workers)
        ref_up, ref_down = hedge_portfolio(study.reference, y, bump_fraction)
        rows = []
        for h in sorted(h_set, reverse=True):
            up, down = hedge_portfolio(study.surfaces[h], y, bump_fraction)
            rows.append(HedgeRow(h, 100 * abs(up - ref_up) / abs(ref_up), 100 * abs(down - ref_down) / abs(ref_down)))
        out[name] = rows
    return HedgeReport(bump_fraction, y, out)

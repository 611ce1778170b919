import math

import numpy as np
import pytest

from hocbates.grid import build_grid
from hocbates.harness import (
    coincident, convergence_study, error_norms, feller_study, fit_slope, hedge_experiment, hedge_portfolio,
    solve_many, stability_sweep, write_feller_csv,
)
from hocbates.solver import NumericalBlowUp, SolutionSurface, SolverConfig
from hocbates.model import ModelParams


def _surface(h, u):
    g = build_grid(h=h)
    return SolutionSurface(u=np.broadcast_to(u, g.shape).astype(float), grid=g, params=ModelParams(), tau=0.5)


def test_error_norms_closed_form():
    coarse, fine = _surface(0.4, 0.0), _surface(0.2, 0.0)
    eps = 1e-3
    shifted = SolutionSurface(coarse.u + eps, coarse.grid, coarse.params, coarse.tau)
    l2, li = error_norms(shifted, fine)
    # V = K e^{-(r+lam) tau} u, so a constant shift in u scales by that factor
    scale = 100 * math.exp(-(0.05 + 0.2) * 0.5)
    assert li == pytest.approx(eps * scale)
    assert l2 == pytest.approx(math.sqrt(0.16 * coarse.grid.size) * eps * scale)


def test_coincident_picks_shared_nodes():
    cg, fg = build_grid(h=0.4), build_grid(h=0.2)
    X, Y = np.meshgrid(fg.x, fg.y)
    Xc, Yc = np.meshgrid(cg.x, cg.y)
    np.testing.assert_allclose(coincident(np.zeros(cg.shape), X + 10 * Y, cg, fg), Xc + 10 * Yc)
    trimmed = coincident(np.zeros((cg.ny, cg.nx - 4)), (X + 10 * Y)[:, 2:-2], cg, fg, trim=2)
    np.testing.assert_allclose(trimmed, (Xc + 10 * Yc)[:, 2:-2])
    with pytest.raises(ValueError):
        coincident(np.zeros(cg.shape), X, cg, build_grid(h=0.2, L2=0.2, R2=3.4))


def test_fit_slope():
    assert fit_slope([0.4, 0.2, 0.1], [16.0, 1.0, 1 / 16]) == pytest.approx(4.0)
    assert math.isnan(fit_slope([0.4], [1.0]))
    assert math.isnan(fit_slope([0.4, 0.2], [1.0, 0.0]))


def test_single_mesh_study_has_no_slope():
    rep = convergence_study(SolverConfig(), [0.4], h_ref=0.2)
    assert not rep.slope_defined and math.isnan(rep.l2_slope)
    assert rep.rows[0].dof == build_grid(h=0.4).size


def test_study_with_supplied_reference_and_csv(tmp_path):
    base = SolverConfig()
    ref = convergence_study(base, [0.4], h_ref=0.1).reference
    rep = convergence_study(base, [0.4, 0.2], h_ref=0.1, reference=ref)
    assert rep.reference is ref and rep.l2_slope > 0
    rep.to_csv(tmp_path / "c.csv")
    lines = (tmp_path / "c.csv").read_text().splitlines()
    assert lines[0] == "h,dof,l2_error,linf_error,wall_time" and lines[-1].startswith("slope")
    d = rep.delta_report()
    assert len(d.rows) == 2 and all(r.l2_error > 0 for r in d.rows)
    with pytest.raises(ValueError):
        convergence_study(base, [0.3], h_ref=0.1)


def test_stability_sweep_single_cell_matches_study(tmp_path):
    base = SolverConfig()
    study = convergence_study(base, [0.4], h_ref=0.1)
    table = stability_sweep(base, [0.4], [0.4], reference=study.reference)
    assert table.l2[0, 0] == pytest.approx(study.rows[0].l2_error, rel=1e-14)
    assert not table.blew_up.any()
    table.to_csv(tmp_path / "s.csv")
    assert (tmp_path / "s.csv").read_text().splitlines()[0] == "ratio,h,l2_error,blew_up"


def test_blow_ups_are_returned_not_raised(monkeypatch):
    from hocbates import harness

    def boom(config):
        raise NumericalBlowUp(3, 7)
    monkeypatch.setattr(harness, "price_surface", boom)
    out = solve_many([SolverConfig()])
    assert isinstance(out[0], NumericalBlowUp)
    table = stability_sweep(SolverConfig(), [0.4], [0.4], reference=_surface(0.1, 0.0))
    assert table.blew_up[0, 0] and math.isnan(table.l2[0, 0])


def test_feller_study_flags_and_csv(tmp_path):
    res = feller_study(SolverConfig(), [0.4, 0.2], h_ref=0.1)
    assert [r.feller for r in res] == [False, True, True]
    write_feller_csv(res, tmp_path / "f.csv")
    assert len((tmp_path / "f.csv").read_text().splitlines()) == 1 + 3 * 2


def _linear_hedge_error(h):
    # V = a + b S has Delta = b, so P - Delta S equals a after any move
    g = build_grid(h=h)
    p = ModelParams()
    V = 7.0 + 0.3 * p.strike * np.exp(g.x)
    u = V / (p.strike * math.exp(-(p.r + p.lam) * 0.5))
    surf = SolutionSurface(np.broadcast_to(u, g.shape).copy(), g, p, 0.5)
    return max(abs(v - 7.0) for v in hedge_portfolio(surf, 1.3, 0.005))


def test_hedge_portfolio_of_linear_value_is_flat():
    e = [_linear_hedge_error(h) for h in (0.4, 0.2, 0.1)]
    assert e[0] < 0.03
    assert all(12 < e[n] / e[n + 1] < 20 for n in range(2))  # fourth order in h


def test_hedge_experiment_reports_every_mesh(tmp_path):
    rep = hedge_experiment(SolverConfig(), [0.4, 0.2], h_ref=0.1)
    assert rep.y == pytest.approx(0.1)
    assert set(rep.schemes) == {"hoc", "second_order"}
    assert all(len(rows) == 2 for rows in rep.schemes.values())
    rep.to_csv(tmp_path / "h.csv")
    assert (tmp_path / "h.csv").read_text().splitlines()[0] == "scheme,h,up_error_pct,down_error_pct"
    with pytest.raises(ValueError):
        hedge_experiment(SolverConfig(), [0.4], bump_fraction=-1.0, h_ref=0.2)

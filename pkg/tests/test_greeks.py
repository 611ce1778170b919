import math
from dataclasses import replace
from functools import lru_cache

import numpy as np
import pytest

from hocbates.grid import build_grid
from hocbates.greeks import TRIM, delta_surface, delta_values
from hocbates.solver import SolverConfig, price_surface


def test_constant_value_has_zero_delta():
    g = build_grid(h=0.4)
    np.testing.assert_allclose(delta_values(np.full(g.shape, 3.0), g, 100.0), 0.0, atol=1e-14)


@pytest.mark.parametrize("h", [0.4, 0.2, 0.1])
def test_stock_payoff_has_unit_delta(h):
    g = build_grid(h=h)
    V = np.broadcast_to(100.0 * np.exp(g.x), g.shape)
    d = delta_values(V, g, 100.0)
    assert d.shape == (g.ny, g.nx - 2 * TRIM)
    # five-point remainder h^4/30 f^(5), and f^(5)/S = 1 here
    assert np.abs(d - 1.0).max() <= h**4 / 30 * math.exp(2 * h) + 1e-12


@lru_cache(maxsize=None)
def _consistent_delta(h):
    cfg = replace(SolverConfig(), dirichlet="consistent", tail="consistent").with_grid(h=h)
    return delta_surface(price_surface(cfg))


def test_deep_in_the_money_delta_is_minus_one():
    d = _consistent_delta(0.05)
    assert d.at(-3.0, 1.0) == pytest.approx(-1.0, abs=0.02)


def test_delta_range_and_monotonicity_away_from_low_variance():
    d = _consistent_delta(0.05)
    rows = d.values[d.grid.y >= 0.2 - 1e-12]
    assert rows.min() >= -1.0 - 1e-5 and rows.max() <= 1e-8
    # a put's Delta rises with S (non-negative Gamma)
    assert np.diff(rows, axis=1).min() >= -1e-8


def test_delta_lookup_and_csv(tmp_path):
    d = _consistent_delta(0.05)
    with pytest.raises(ValueError):
        d.at(-4.0, 1.0)
    path = tmp_path / "delta.csv"
    d.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "x,y,S,sigma,delta"
    assert len(lines) == 1 + d.values.size


def test_delta_needs_enough_columns():
    g = replace(build_grid(h=0.4), N=2)
    with pytest.raises(ValueError):
        delta_values(np.zeros((9, 5)), g, 100.0)

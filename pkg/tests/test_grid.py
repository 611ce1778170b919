import math

import pytest
from hypothesis import given, strategies as st

from hocbates.grid import build_grid


def test_default_domain_at_coarsest_mesh():
    g = build_grid(R1=4, L2=0.1, R2=3.3, h=0.4)
    assert (g.N, g.M, g.nx, g.ny) == (10, 8, 21, 9)
    assert g.shape == (9, 21)
    assert g.x[0] == pytest.approx(-4.0) and g.x[-1] == pytest.approx(4.0)
    assert g.y[0] == pytest.approx(0.1) and g.y[-1] == pytest.approx(3.3)


@pytest.mark.parametrize("kw", [dict(h=0.3), dict(L2=0.0), dict(L2=-0.1), dict(h=0.0), dict(h=-0.1),
                                dict(parabolic_ratio=0.0), dict(R2=0.1)])
def test_invalid_grids_rejected(kw):
    with pytest.raises(ValueError):
        build_grid(**kw)


def test_odd_half_count_rejected():
    with pytest.raises(ValueError, match="even"):
        build_grid(R1=2.0, h=0.4)


@pytest.mark.parametrize("h", [0.4, 0.2, 0.1, 0.05, 0.025])
@pytest.mark.parametrize("ratio", [0.1, 0.4, 1.0])
def test_time_steps_land_on_maturity(h, ratio):
    g = build_grid(h=h, parabolic_ratio=ratio)
    assert g.n_steps * g.k == pytest.approx(0.5, rel=1e-14)
    assert g.k <= ratio * h * h * (1 + 1e-12)


@given(st.integers(-10, 10), st.integers(0, 8))
def test_node_index_round_trip(i, j):
    g = build_grid(h=0.4)
    idx = g.node_index(i, j)
    assert g.node_from_index(idx) == (i, j)
    assert g.x_index(g.x[i + g.N]) == i
    assert g.y_index(g.y[j]) == j


def test_index_errors():
    g = build_grid(h=0.4)
    with pytest.raises(IndexError):
        g.node_index(11, 0)
    with pytest.raises(IndexError):
        g.node_from_index(g.size)
    with pytest.raises(ValueError):
        g.x_index(0.1)
    with pytest.raises(ValueError):
        g.y_index(3.7)


def test_standard_meshes_nest_in_reference():
    fine = build_grid(h=0.025)
    for h in (0.4, 0.2, 0.1, 0.05):
        assert build_grid(h=h).nests_in(fine)
    assert not build_grid(L2=0.5, R2=3.7, h=0.4).nests_in(fine)


def test_node_count_formula():
    for h in (0.4, 0.2, 0.1):
        g = build_grid(h=h)
        assert g.size == (2 * round(4 / h) + 1) * (round(3.2 / h) + 1)
        assert math.isclose(g.R1, g.N * g.h) and math.isclose(g.R2, g.L2 + g.M * g.h)

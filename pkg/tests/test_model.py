import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from hocbates.model import (
    ModelParams, from_transformed, jump_density_logspace, payoff_transformed, to_transformed,
    value_to_financial, xi_B,
)


def test_defaults_match_reference_parameter_set(params):
    assert (params.r, params.kappa, params.theta, params.vol_of_vol, params.rho, params.lam) == (
        0.05, 2.0, 0.01, 0.1, -0.5, 0.2)
    assert (params.strike, params.maturity) == (100.0, 0.5)
    assert (params.jump_mean, params.jump_std) == (-0.5, 0.4)


@pytest.mark.parametrize("bad", [
    dict(vol_of_vol=0.0), dict(jump_std=-0.1), dict(lam=-1.0), dict(strike=0.0),
    dict(maturity=0.0), dict(rho=1.5), dict(kappa=-1.0), dict(r=float("nan")),
])
def test_invalid_parameters_rejected(bad):
    with pytest.raises(ValueError):
        ModelParams(**bad)


def test_feller_flags_for_three_regimes():
    flags = [ModelParams(theta=0.04, vol_of_vol=v).feller_satisfied() for v in (0.7, 0.4, 0.1)]
    assert flags == [False, True, True]  # equality counts as satisfied


def test_xi_b_is_mean_relative_jump(params):
    # E[e^Z] - 1 by quadrature of the log-normal jump law
    m, _ = integrate.quad(lambda z: math.exp(z) * jump_density_logspace(z, params), -12, 12)
    assert xi_B(params) == pytest.approx(m - 1.0, abs=1e-12)
    assert xi_B(params) == pytest.approx(math.exp(-0.5 + 0.08) - 1.0, rel=1e-14)


def test_jump_density_is_a_probability_density(params):
    total, _ = integrate.quad(lambda z: jump_density_logspace(z, params), -12, 12)
    mean, _ = integrate.quad(lambda z: z * jump_density_logspace(z, params), -12, 12)
    assert total == pytest.approx(1.0, abs=1e-12)
    assert mean == pytest.approx(params.jump_mean, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(S=st.floats(1.0, 1e4), sigma=st.floats(1e-4, 2.0), t=st.floats(0.0, 0.5))
def test_transform_round_trip(S, sigma, t):
    p = ModelParams()
    pt = to_transformed(S, sigma, t, p)
    S2, sig2 = from_transformed(pt.x, pt.y, p)
    assert S2 == pytest.approx(S, rel=1e-12)
    assert sig2 == pytest.approx(sigma, rel=1e-12)
    assert pt.tau == pytest.approx(p.maturity - t)


def test_to_transformed_rejects_out_of_range(params):
    with pytest.raises(ValueError):
        to_transformed(-1.0, 0.1, 0.0, params)
    with pytest.raises(ValueError):
        to_transformed(100.0, 0.1, 0.6, params)


def test_value_back_transform(params):
    tau = 0.3
    u = 0.05
    assert value_to_financial(u, tau, params) == pytest.approx(100 * u * math.exp(-0.25 * tau))
    assert value_to_financial(u, tau, params, "paper-literal") == pytest.approx(100 * u * math.exp(-0.25))
    with pytest.raises(ValueError):
        value_to_financial(u, tau, params, "other")
    with pytest.raises(ValueError):
        value_to_financial(u, -1.0, params)


def test_payoff_is_put_per_unit_strike():
    x = np.array([-1.0, 0.0, 0.5])
    np.testing.assert_allclose(payoff_transformed(x), [1 - math.exp(-1.0), 0.0, 0.0])
    assert payoff_transformed(-3.0) == pytest.approx(1 - math.exp(-3.0))

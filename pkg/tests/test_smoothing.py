import numpy as np
import pytest
from scipy import integrate

from hocbates.grid import build_grid
from hocbates.model import payoff_transformed
from hocbates.smoothing import phi4_hat, phi4_kernel, smooth_initial, smooth_payoff_1d, smoothing_kernel


@pytest.mark.parametrize("w", [0.0, 0.7, 2.0, 5.5])
def test_kernel_is_inverse_transform_of_phi4_hat(w):
    # phi4 is even, so its transform is the cosine integral
    val, _ = integrate.quad(lambda s: phi4_kernel(s) * np.cos(w * s), -3, 3, points=[-2, -1, 0, 1, 2])
    assert val == pytest.approx(phi4_hat(w), abs=1e-12)


def test_kernel_moments():
    kern = smoothing_kernel()
    q = kern.values * kern.weights
    assert q.sum() == pytest.approx(1.0, abs=1e-14)
    assert (q * kern.nodes).sum() == pytest.approx(0.0, abs=1e-14)
    # fourth-order kernel: the second moment vanishes as well
    assert (q * kern.nodes**2).sum() == pytest.approx(0.0, abs=1e-12)
    assert phi4_kernel(3.5) == 0.0 and phi4_kernel(0.0) > 0


def test_smoothed_payoff_equals_payoff_away_from_kink():
    x = np.array([-2.0, -1.5, 1.5])
    # the put payoff is exactly reproduced away from the kink only where it is a polynomial
    np.testing.assert_allclose(smooth_payoff_1d(x[2:], 0.4), 0.0, atol=1e-15)
    err = np.abs(smooth_payoff_1d(x[:2], 0.1) - payoff_transformed(x[:2]))
    assert err.max() < 1e-6


def test_smoothed_payoff_converges_to_payoff():
    x = np.linspace(-1, 1, 41)
    errs = [np.abs(smooth_payoff_1d(x, h) - payoff_transformed(x)).max() for h in (0.2, 0.1, 0.05)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 0.02


def test_two_dimensional_quadrature_agrees():
    g = build_grid(h=0.4)
    np.testing.assert_allclose(smooth_initial(g, method="2d"), smooth_initial(g), rtol=1e-13, atol=1e-15)
    with pytest.raises(ValueError):
        smooth_initial(g, method="3d")

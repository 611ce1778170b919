"""Bates model parameters, the log-jump law and the (x, y, tau, u) change of variables.

Prices are computed per unit strike in the transformed variables

    x = log(S / K),   y = sigma / vol_of_vol,   tau = T - t,
    u = exp((r + lambda) * tau) * V / K,

so the put payoff becomes ``max(1 - exp(x), 0)`` and the transformed equation has
no zero-order term.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from typing import NamedTuple

import numpy as np

TRANSFORMS = ("consistent", "paper-literal")


@dataclass(frozen=True)
class ModelParams:
    """Bates model constants.

    ``vol_of_vol`` drives the variance diffusion; ``jump_std`` is the standard
    deviation of the log jump size. Both are written ``v`` in the usual statement
    of the model, so they are kept apart here.
    """

    r: float = 0.05
    kappa: float = 2.0
    theta: float = 0.01
    vol_of_vol: float = 0.1
    rho: float = -0.5
    lam: float = 0.2
    jump_mean: float = -0.5
    jump_std: float = 0.4
    strike: float = 100.0
    maturity: float = 0.5

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not math.isfinite(value):
                raise ValueError(f"{f.name} must be finite, got {value!r}")
        if self.vol_of_vol <= 0:
            raise ValueError("vol_of_vol must be positive")
        if self.jump_std <= 0:
            raise ValueError("jump_std must be positive")
        if self.kappa < 0:
            raise ValueError("kappa must be non-negative")
        if self.lam < 0:
            raise ValueError("lam (jump intensity) must be non-negative")
        if self.strike <= 0:
            raise ValueError("strike must be positive")
        if self.maturity <= 0:
            raise ValueError("maturity must be positive")
        if abs(self.rho) > 1:
            raise ValueError("rho must lie in [-1, 1]")

    def feller_satisfied(self) -> bool:
        """True when 2*kappa*theta >= vol_of_vol**2 (equality counts as satisfied)."""
        lhs, rhs = 2.0 * self.kappa * self.theta, self.vol_of_vol**2
        return lhs >= rhs or math.isclose(lhs, rhs, rel_tol=1e-12)

    def replace(self, **changes) -> "ModelParams":
        return replace(self, **changes)


class TransformedPoint(NamedTuple):
    x: float
    y: float
    tau: float


def xi_B(params: ModelParams) -> float:
    """Mean relative jump size E[J], the jump compensator of the drift."""
    return math.expm1(params.jump_mean + 0.5 * params.jump_std**2)


def jump_density_logspace(z, params: ModelParams):
    """Density of the log jump size: Gaussian with mean ``jump_mean`` and std ``jump_std``."""
    z = np.asarray(z, dtype=float)
    s = params.jump_std
    out = np.exp(-0.5 * ((z - params.jump_mean) / s) ** 2) / (math.sqrt(2.0 * math.pi) * s)
    return out if out.ndim else float(out)


def to_transformed(S: float, sigma: float, t: float, params: ModelParams) -> TransformedPoint:
    if S <= 0:
        raise ValueError(f"asset price must be positive, got {S}")
    if sigma <= 0:
        raise ValueError(f"variance must be positive, got {sigma}")
    if not 0 <= t <= params.maturity:
        raise ValueError(f"t={t} outside [0, {params.maturity}]")
    return TransformedPoint(math.log(S / params.strike), sigma / params.vol_of_vol, params.maturity - t)


def from_transformed(x, y, params: ModelParams):
    """Inverse of the spatial part of :func:`to_transformed`: returns (S, sigma)."""
    return params.strike * np.exp(x), params.vol_of_vol * np.asarray(y)


def value_to_financial(u, tau: float, params: ModelParams, transform: str = "consistent"):
    """Back-transform ``u`` to an option value in currency units.

    ``transform="paper-literal"`` drops the tau in the discount exponent
    (``u = exp(r + lambda) * V``); it exists only to compare readings.
    """
    if tau < 0:
        raise ValueError("tau must be non-negative")
    if transform == "consistent":
        factor = math.exp(-(params.r + params.lam) * tau)
    elif transform == "paper-literal":
        factor = math.exp(-(params.r + params.lam))
    else:
        raise ValueError(f"unknown transform {transform!r}; expected one of {TRANSFORMS}")
    return params.strike * factor * u


def payoff_transformed(x):
    """Put payoff per unit strike, ``max(1 - e^x, 0)``."""
    x = np.asarray(x, dtype=float)
    out = np.maximum(-np.expm1(x), 0.0)
    return out if out.ndim else float(out)

"""Convergence-bound quantities for local-update distributed gradient descent.

With learning rate ``eta``, smoothness ``beta``, gradient divergence ``delta``
and control parameter ``b0``:

    h(tau)  = delta/beta * (C**tau - 1) - eta*delta*tau,     C = eta*beta + 1
    nu(tau) = A - B * (C**tau - 1 - (C - 1)*tau) / tau,      A = eta*(1 - beta*eta/2),
                                                             B = delta/beta * b0
    P(tau)  = 1 / nu(tau)

Everything accepts real ``tau >= 1`` (scalars or arrays).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleError


@dataclass(frozen=True)
class ConvergenceParams:
    eta: float
    beta: float
    delta: float
    b0: float

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError(f"eta must be positive, got {self.eta!r}")
        if not self.beta > 0:
            raise ValueError(f"beta must be positive, got {self.beta!r}")
        if not self.delta >= 0:
            raise ValueError(f"delta must be >= 0, got {self.delta!r}")
        if not self.b0 > 0:
            raise ValueError(f"b0 must be positive, got {self.b0!r}")
        if self.eta * self.beta > 1:
            raise ValueError(f"eta*beta must be <= 1, got {self.eta * self.beta!r}")

    @property
    def A(self) -> float:
        return self.eta * (1.0 - self.beta * self.eta / 2.0)

    @property
    def B(self) -> float:
        return self.delta / self.beta * self.b0

    @property
    def C(self) -> float:
        return self.eta * self.beta + 1.0


def _check_tau(tau):
    t = np.asarray(tau, dtype=float)
    if np.any(~(t >= 1)):
        raise ValueError(f"tau must be >= 1, got {tau!r}")
    return t


def _excess(params: ConvergenceParams, t):
    """C**t - 1 - (C - 1)*t, computed without cancellation near C = 1.

    ``C - 1`` is taken as ``expm1(log C)`` from the same routine as the first
    term, so the result is exactly zero at t = 1.
    """
    log_c = math.log1p(params.eta * params.beta)
    with np.errstate(over="ignore", invalid="ignore"):
        return np.expm1(t * log_c) - t * np.expm1(log_c)


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def h_tau(params: ConvergenceParams, tau):
    """Bound on the distance between the aggregated and centralized trajectories after ``tau`` steps."""
    t = _check_tau(tau)
    if params.delta == 0:
        return _out(np.zeros_like(t))
    return _out(params.delta / params.beta * _excess(params, t))


def nu_tau(params: ConvergenceParams, tau):
    t = _check_tau(tau)
    if params.delta == 0:
        return _out(np.full_like(t, params.A))
    with np.errstate(over="ignore", invalid="ignore"):
        return _out(params.A - params.B * _excess(params, t) / t)


def p_tau(params: ConvergenceParams, tau):
    """Loss-gap factor ``1/nu``; raises when ``nu(tau) <= 0``."""
    nu = np.asarray(nu_tau(params, tau))
    if np.any(~(nu > 0)):
        raise InfeasibleError(f"nu(tau) <= 0 at tau={tau!r}: learning-rate bound violated")
    return _out(1.0 / nu)


def feasible_tau_upper(params: ConvergenceParams, cap: int = 2**62):
    """Largest integer tau with ``nu(tau) > 0``; ``math.inf`` when nu never drops.

    ``nu`` is nonincreasing in tau, so doubling followed by bisection suffices.
    """
    if not nu_tau(params, 1) > 0:
        raise InfeasibleError("nu(1) <= 0: no feasible number of local updates")
    if params.delta == 0:
        return math.inf
    lo, hi = 1, 2
    while nu_tau(params, hi) > 0:
        lo, hi = hi, hi * 2
        if hi > cap:
            return math.inf
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if nu_tau(params, mid) > 0:
            lo = mid
        else:
            hi = mid
    return lo

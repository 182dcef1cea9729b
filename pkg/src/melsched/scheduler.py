"""Joint choice of local updates, total updates and per-learner batch sizes.

For a fixed number of local updates ``tau`` the heterogeneity-aware (HA) plan
gives every participating learner the batch that makes it finish exactly at the
budget ``T``:

    d_k = (T*tau/L - c0_k) / (c2_k*tau + c1_k)

and ``L`` is fixed by requiring the batches to sum to the dataset size ``d``:

    L(tau) = T*tau * sum_k 1/(c2_k*tau + c1_k) / (d + sum_k c0_k/(c2_k*tau + c1_k))

Learners whose batch would be negative are too slow to take part; they are
dropped and ``L`` is re-solved over the rest. The objective minimized over
integer ``tau`` is ``O(tau) = P(tau) / L(tau)``.

The heterogeneity-unaware (HU) baseline splits the data evenly and lets the
slowest learner set ``L``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .bounds import ConvergenceParams, feasible_tau_upper, nu_tau, p_tau
from .costs import CostCoefficients
from .errors import InfeasibleError

HA = "HA"
HU = "HU"
POLICIES = (HA, HU)

# Batches within this many samples of an integer are snapped before flooring, so
# that e.g. 2699.9999999996 counts as 2700.
_SNAP = 1e-9


@dataclass(frozen=True)
class FleetCosts:
    c2: np.ndarray
    c1: np.ndarray
    c0: np.ndarray
    d: int
    T: float

    def __post_init__(self):
        for name in ("c2", "c1", "c0"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float).reshape(-1))
        K = self.c2.size
        if K < 1 or self.c1.size != K or self.c0.size != K:
            raise ValueError("coefficient arrays must be non-empty and of equal length")
        if np.any(self.c2 <= 0) or np.any(self.c0 <= 0) or np.any(self.c1 < 0):
            raise ValueError("need c2 > 0, c0 > 0 and c1 >= 0 for every learner")
        if int(self.d) != self.d or self.d < K:
            raise ValueError(f"d must be an integer >= K={K}, got {self.d!r}")
        if not self.T > 0:
            raise ValueError(f"T must be positive, got {self.T!r}")
        object.__setattr__(self, "d", int(self.d))

    @classmethod
    def from_coefficients(cls, coeffs: Sequence[CostCoefficients], d: int, T: float) -> "FleetCosts":
        return cls(
            c2=[c.c2 for c in coeffs],
            c1=[c.c1 for c in coeffs],
            c0=[c.c0 for c in coeffs],
            d=d,
            T=T,
        )

    @property
    def K(self) -> int:
        return self.c2.size

    @property
    def a(self) -> np.ndarray:
        return self.c1 / self.c2

    @property
    def b(self) -> np.ndarray:
        return self.c0 / self.c2

    def with_budget(self, T: float) -> "FleetCosts":
        return FleetCosts(self.c2, self.c1, self.c0, self.d, T)

    def learner_times(self, batches, tau, L) -> np.ndarray:
        """Per-learner time for ``L`` updates; learners with no samples sit out and cost nothing."""
        batches = np.asarray(batches, dtype=float)
        t = L * (self.c2 * batches + (self.c1 * batches + self.c0) / tau)
        return np.where(batches > 0, t, 0.0)


@dataclass(frozen=True)
class Schedule:
    tau: int
    total_updates: float
    batches: np.ndarray
    real_batches: np.ndarray
    residual: int
    policy: str = HA

    @property
    def global_cycles(self) -> float:
        return self.total_updates / self.tau

    @property
    def completed_cycles(self) -> int:
        return int(math.floor(self.global_cycles + _SNAP))

    @property
    def inactive(self) -> tuple:
        return tuple(int(k) for k in np.flatnonzero(self.batches == 0))


def l_given_dk_tau(costs: CostCoefficients, d_k, tau, T):
    """Total updates that make one learner with ``d_k`` samples use exactly ``T``."""
    if not np.all(np.asarray(tau) >= 1):
        raise ValueError(f"tau must be >= 1, got {tau!r}")
    if np.any(np.asarray(d_k) < 0):
        raise ValueError(f"d_k must be >= 0, got {d_k!r}")
    return T * tau / (costs.c2 * tau * d_k + costs.c1 * d_k + costs.c0)


def _equal_finish(fleet: FleetCosts, tau):
    """L(tau) and real batches for the HA plan; vectorized over ``tau``."""
    t = np.atleast_1d(np.asarray(tau, dtype=float))
    if np.any(~(t >= 1)):
        raise ValueError(f"tau must be >= 1, got {tau!r}")
    tt = t[:, None]
    D = fleet.c2 * tt + fleet.c1
    active = np.ones(D.shape, dtype=bool)
    for _ in range(fleet.K):
        inv = np.where(active, 1.0 / D, 0.0)
        L = fleet.T * t * inv.sum(axis=1) / (fleet.d + (fleet.c0 * inv).sum(axis=1))
        dk = (fleet.T * tt / L[:, None] - fleet.c0) / D
        dropped = active & (dk < 0)
        if not dropped.any():
            break
        active &= ~dropped
    dk = np.where(active, dk, 0.0)
    if np.ndim(tau) == 0:
        return float(L[0]), dk[0]
    return L, dk


def l_of_tau(fleet: FleetCosts, tau):
    """Total updates under the HA plan (every active learner finishes at ``T``)."""
    return _equal_finish(fleet, tau)[0]


def real_batches(fleet: FleetCosts, tau, L=None) -> np.ndarray:
    """Unfloored batches; with ``L=None`` the HA value ``L(tau)`` is used."""
    if L is None:
        return _equal_finish(fleet, tau)[1]
    if not tau >= 1:
        raise ValueError(f"tau must be >= 1, got {tau!r}")
    dk = (fleet.T * tau / L - fleet.c0) / (fleet.c2 * tau + fleet.c1)
    return np.maximum(dk, 0.0)


def equal_split(d: int, K: int) -> np.ndarray:
    """``floor(d/K)`` samples each, the remainder going one apiece to the lowest indices."""
    batches = np.full(K, d // K, dtype=np.int64)
    batches[: d - batches.sum()] += 1
    return batches


def l_of_tau_hu(fleet: FleetCosts, tau):
    """Total updates under an even split, limited by the slowest learner."""
    dk = equal_split(fleet.d, fleet.K).astype(float)
    t = np.atleast_1d(np.asarray(tau, dtype=float))
    if np.any(~(t >= 1)):
        raise ValueError(f"tau must be >= 1, got {tau!r}")
    per = fleet.T * t[:, None] / (fleet.c2 * t[:, None] * dk + fleet.c1 * dk + fleet.c0)
    L = per.min(axis=1)
    return float(L[0]) if np.ndim(tau) == 0 else L


def _l_for(policy: str):
    if policy == HA:
        return l_of_tau
    if policy == HU:
        return l_of_tau_hu
    raise ValueError(f"unknown policy {policy!r}; expected one of {POLICIES}")


def batch_allocation(fleet: FleetCosts, tau: int, L: float) -> Schedule:
    """Integer batches for a given ``(tau, L)``.

    Real batches are clamped at zero and floored. The leftover samples are then
    handed out one per learner, cheapest marginal time ``c2 + c1/tau`` first,
    skipping any learner the extra sample would push over ``T``. Whatever
    cannot be placed stays in ``residual``; more than ``K - 1`` of them means
    ``L`` is too large for the fleet to cover the dataset.
    """
    if not tau >= 1:
        raise ValueError(f"tau must be >= 1, got {tau!r}")
    if not L > 0:
        raise ValueError(f"L must be positive, got {L!r}")
    real = real_batches(fleet, tau, L)
    total = real.sum()
    if total > fleet.d:
        # budget has slack: shrinking every batch keeps each learner inside T
        real = real * (fleet.d / total)
    batches = np.floor(real + _SNAP).astype(np.int64)
    if batches.sum() > fleet.d:
        batches = np.floor(real).astype(np.int64)
    residual = fleet.d - int(batches.sum())

    marginal = fleet.c2 + fleet.c1 / tau
    for k in np.argsort(marginal, kind="stable"):
        if residual == 0:
            break
        extra = batches[k] + 1
        if L * (fleet.c2[k] * extra + (fleet.c1[k] * extra + fleet.c0[k]) / tau) <= fleet.T:
            batches[k] = extra
            residual -= 1
    if residual >= fleet.K:
        raise InfeasibleError(
            f"{residual} samples cannot be placed within T={fleet.T} at tau={tau}, L={L}",
            shortfall=residual,
        )
    return Schedule(int(tau), float(L), batches, real, residual, HA)


def objective(fleet: FleetCosts, params: ConvergenceParams, tau, policy: str = HA):
    """Loss-gap bound ``P(tau) / L(tau)``."""
    return p_tau(params, tau) / _l_for(policy)(fleet, tau)


@dataclass(frozen=True)
class TauSearch:
    tau: int
    value: float
    probes: int
    upper: int


def unimodal_argmin(f: Callable[[int], float], lo: int, hi: int):
    """Smallest minimizer of a unimodal integer sequence on ``[lo, hi]``.

    Bisects on the sign of the forward difference, so it needs at most
    ``2*ceil(log2(hi - lo + 1))`` evaluations. Returns ``(argmin, probes)``.
    """
    cache = {}

    def g(x):
        if x not in cache:
            cache[x] = f(x)
        return cache[x]

    while lo < hi:
        mid = (lo + hi) // 2
        if g(mid + 1) < g(mid):
            lo = mid + 1
        else:
            hi = mid
    return lo, len(cache)


def search_tau(fleet: FleetCosts, params: ConvergenceParams, tau_max: int, policy: str = HA) -> TauSearch:
    if not tau_max >= 1:
        raise InfeasibleError(f"tau_max must be >= 1, got {tau_max!r}")
    upper = feasible_tau_upper(params)
    hi = int(min(tau_max, upper))
    L = _l_for(policy)

    def O(t):
        return p_tau(params, t) / L(fleet, t)

    tau, probes = unimodal_argmin(O, 1, hi)
    return TauSearch(tau, O(tau), probes, hi)


def find_tau_star(fleet: FleetCosts, params: ConvergenceParams, tau_max: int, policy: str = HA) -> int:
    return search_tau(fleet, params, tau_max, policy).tau


def ha_schedule(fleet: FleetCosts, params: ConvergenceParams, tau_max: int, tau=None) -> Schedule:
    """HA plan at ``tau`` (or at the optimal tau when omitted)."""
    if tau is None:
        tau = find_tau_star(fleet, params, tau_max)
    return batch_allocation(fleet, tau, l_of_tau(fleet, tau))


def hu_schedule(fleet: FleetCosts, params: ConvergenceParams, tau_max: int, tau=None) -> Schedule:
    """Even split; tau chosen by the same bound with the bottleneck ``L``."""
    if tau is None:
        tau = find_tau_star(fleet, params, tau_max, HU)
    batches = equal_split(fleet.d, fleet.K)
    return Schedule(int(tau), l_of_tau_hu(fleet, tau), batches, batches.astype(float), 0, HU)


def plan_schedule(fleet: FleetCosts, params: ConvergenceParams, tau_max: int, policy: str = HA, tau=None) -> Schedule:
    if policy == HA:
        return ha_schedule(fleet, params, tau_max, tau)
    if policy == HU:
        return hu_schedule(fleet, params, tau_max, tau)
    raise ValueError(f"unknown policy {policy!r}; expected one of {POLICIES}")


# -- convexity certificate ---------------------------------------------------

def tau_threshold(C: float) -> float:
    """``(C ln C + 1 - C) / ln C``, the tau above which the bound terms keep their sign."""
    x = C - 1.0
    if not 0 < x <= 1:
        raise ValueError(f"C must lie in (1, 2], got {C!r}")
    if x < 1e-4:
        num = sum((-1) ** n * x**n / (n * (n - 1)) for n in range(2, 9))
        den = sum((-1) ** (n + 1) * x**n / n for n in range(1, 9))
        return num / den
    lnc = math.log1p(x)
    return (C * lnc + 1.0 - C) / lnc


def reciprocal_l_terms(fleet: FleetCosts, tau: float) -> dict:
    """``1/L = M + N`` and the first two tau-derivatives of each, all learners active.

    With ``D_k = c2_k*tau + c1_k``, ``S = sum tau/D_k`` and ``R = sum c0_k/D_k``:
    ``M = d/(T S)`` and ``N = R/(T S)``.
    """
    c2, c1, c0, T = fleet.c2, fleet.c1, fleet.c0, fleet.T
    D = c2 * tau + c1
    S = np.sum(tau / D)
    S1 = np.sum(c1 / D**2)
    S2 = -2.0 * np.sum(c1 * c2 / D**3)
    R = np.sum(c0 / D)
    R1 = -np.sum(c0 * c2 / D**2)
    R2 = 2.0 * np.sum(c0 * c2**2 / D**3)
    d = fleet.d
    return {
        "M": d / (T * S),
        "M1": -d * S1 / (T * S**2),
        "M2": d / T * (2.0 * S1**2 / S**3 - S2 / S**2),
        "N": R / (T * S),
        "N1": (R1 * S - R * S1) / (T * S**2),
        "N2": (R2 / S - 2.0 * R1 * S1 / S**2 - R * S2 / S**2 + 2.0 * R * S1**2 / S**3) / T,
    }


@dataclass(frozen=True)
class ConvexityReport:
    grid: np.ndarray
    second_differences: np.ndarray
    second_difference_ok: bool
    threshold: float
    threshold_ok: bool
    m1_negative: bool
    n1_negative: bool
    m2_positive: bool
    n2_positive: bool

    @property
    def passed(self) -> bool:
        return all((self.second_difference_ok, self.threshold_ok, self.m1_negative,
                    self.n1_negative, self.m2_positive, self.n2_positive))


def convexity_certificate(fleet: FleetCosts, params: ConvergenceParams, tau_grid, policy: str = HA) -> ConvexityReport:
    """Numerical evidence that ``O(tau)`` is strictly convex on the feasible part of ``tau_grid``."""
    grid = np.asarray(tau_grid, dtype=float)
    if grid.ndim != 1 or grid.size < 3 or np.any(grid < 1) or np.any(np.diff(grid) <= 0):
        raise ValueError("tau_grid must be an increasing 1-d grid of at least 3 points >= 1")
    grid = grid[np.asarray(nu_tau(params, grid)) > 0]
    O = np.asarray(objective(fleet, params, grid, policy)) if grid.size else np.empty(0)
    if grid.size >= 3:
        h1 = np.diff(grid)
        slopes = np.diff(O) / h1
        second = 2.0 * np.diff(slopes) / (grid[2:] - grid[:-2])
    else:
        second = np.empty(0)
    thr = tau_threshold(params.C)
    terms = [reciprocal_l_terms(fleet, t) for t in grid]
    return ConvexityReport(
        grid=grid,
        second_differences=second,
        second_difference_ok=bool(second.size == 0 or np.all(second > 0)),
        threshold=thr,
        threshold_ok=bool(grid.size == 0 or grid[0] > thr),
        m1_negative=all(t["M1"] < 0 for t in terms),
        n1_negative=all(t["N1"] < 0 for t in terms),
        m2_positive=all(t["M2"] > 0 for t in terms),
        n2_positive=all(t["N2"] > 0 for t in terms),
    )

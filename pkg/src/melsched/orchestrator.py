"""The global training loop: dispatch, local updates, aggregation and re-planning.

Time is simulated. Each global cycle costs the slowest participating learner's
``tau*c2*d_k + c1*d_k + c0`` seconds according to the cost model, which makes
runs deterministic for a given seed.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Union

import numpy as np

from .bounds import ConvergenceParams
from .costs import LearnerProfile, OffloadMode, cost_coefficients
from .errors import InfeasibleError
from .learners import SyntheticTask, aggregate, local_gradient, local_loss, local_train
from .scheduler import (
    HA,
    POLICIES,
    FleetCosts,
    Schedule,
    equal_split,
    objective,
    plan_schedule,
    search_tau,
)

logger = logging.getLogger(__name__)

DELTA_ESTIMATORS = ("gradient", "loss")


def fleet_from_profiles(profiles: Sequence[LearnerProfile], mode, d: int, T: float) -> FleetCosts:
    return FleetCosts.from_coefficients([cost_coefficients(p, mode) for p in profiles], d, T)


def auto_tau_max(fleet: FleetCosts, T: Optional[float] = None, hard_cap: int = 10_000) -> int:
    """Largest tau for which three global cycles on an even split fit in ``T``."""
    T = fleet.T if T is None else T
    share = fleet.d / fleet.K
    comp = float(np.max(fleet.c2 * share))
    comm = float(np.max(fleet.c1 * share + fleet.c0))

    def fits(tau):
        return 3.0 * (tau * comp + comm) <= T

    guess = (T / 3.0 - comm) / comp
    if not math.isfinite(guess) or guess >= hard_cap:
        return hard_cap
    tau = max(int(math.floor(guess)), 1)
    while tau > 1 and not fits(tau):
        tau -= 1
    while tau < hard_cap and fits(tau + 1):
        tau += 1
    return max(1, min(tau, hard_cap))


def estimate_beta(grads_local, grads_global, models, w, weights, previous=None):
    """Sample-weighted mean of ``||grad F_k(w_k) - grad F_k(w)|| / ||w_k - w||``.

    Learners whose local model coincides with ``w`` (to 1e-12) are skipped.
    Returns ``(beta, fell_back)``; with no usable learner ``previous`` is returned.
    """
    num = den = 0.0
    for g_k, g_w, w_k, n in zip(grads_local, grads_global, models, weights):
        gap = float(np.linalg.norm(np.asarray(w_k) - w))
        if n <= 0 or gap < 1e-12:
            continue
        num += n * float(np.linalg.norm(np.asarray(g_k) - g_w)) / gap
        den += n
    if den == 0 or not num > 0:
        return previous, True
    return float(num / den), False


def estimate_delta(grads=None, weights=None, losses=None, method="gradient"):
    """Sample-weighted divergence of local from global gradients (or losses) at one model."""
    weights = np.asarray(weights, dtype=float)
    mask = weights > 0
    wts = weights[mask]
    if method == "gradient":
        G = np.asarray(grads, dtype=float)[mask]
        g = wts @ G / wts.sum()
        div = np.linalg.norm(G - g, axis=1)
    elif method == "loss":
        F = np.asarray(losses, dtype=float)[mask]
        div = np.abs(F - wts @ F / wts.sum())
    else:
        raise ValueError(f"unknown delta estimator {method!r}; expected one of {DELTA_ESTIMATORS}")
    return float(wts @ div / wts.sum())


@dataclass
class TrainingConfig:
    T: float
    policy: str = HA
    mode: OffloadMode = OffloadMode.OL
    eta: float = 0.01
    b0: float = 0.0075
    beta_override: Optional[float] = None
    delta_override: Optional[float] = None
    delta_estimator: str = "gradient"
    beta_init: float = 1.0
    delta_init: float = 0.0
    tau_max: Union[int, str] = "auto"
    tau_hard_cap: int = 10_000
    seed: int = 0
    minibatch: int = 0

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError(f"T must be positive, got {self.T!r}")
        if self.policy not in POLICIES:
            raise ValueError(f"unknown policy {self.policy!r}; expected one of {POLICIES}")
        if self.delta_estimator not in DELTA_ESTIMATORS:
            raise ValueError(f"unknown delta estimator {self.delta_estimator!r}")
        self.mode = OffloadMode(self.mode)


@dataclass
class RoundLog:
    g: int
    tau: int
    L: float
    batches: np.ndarray
    max_time_s: float
    beta: float
    delta: float
    global_loss: float
    bound: float
    remaining_before: float
    reduced: bool = False
    beta_fallback: bool = False


@dataclass
class TrainingState:
    w: np.ndarray
    T0: float
    elapsed: float = 0.0
    round_index: int = 0
    params: Optional[ConvergenceParams] = None
    schedule: Optional[Schedule] = None
    logs: List[RoundLog] = field(default_factory=list)

    @property
    def remaining_budget(self) -> float:
        return self.T0 - self.elapsed


@dataclass
class TrainingReport:
    w: np.ndarray
    logs: List[RoundLog]
    initial_loss: float
    final_loss: float
    total_time: float
    tau_max: int
    accuracy: Optional[float] = None
    status: str = "ok"
    message: str = ""

    @property
    def rounds(self) -> int:
        return len(self.logs)


def _initial_schedule(d, K, policy):
    batches = equal_split(d, K)
    return Schedule(1, 1.0, batches, batches.astype(float), 0, policy)


def _cycle_time(fleet: FleetCosts, sched: Schedule) -> float:
    return float(fleet.learner_times(sched.batches, sched.tau, sched.tau).max())


def _plan(fleet, params, tau_max, policy):
    """Optimal schedule for the remaining budget, shrinking tau until one cycle fits.

    Returns ``(schedule, reduced)`` or ``(None, True)`` when not even ``tau = 1`` fits.
    """
    tau = search_tau(fleet, params, tau_max, policy).tau
    for t in range(tau, 0, -1):
        try:
            sched = plan_schedule(fleet, params, tau_max, policy, tau=t)
        except InfeasibleError:
            continue
        if _cycle_time(fleet, sched) <= fleet.T:
            return sched, t != tau
    return None, True


def run_training(
    profiles: Sequence[LearnerProfile],
    task: SyntheticTask,
    config: TrainingConfig,
    refresh: Optional[Callable] = None,
):
    """Train until the simulated budget cannot fit another cycle.

    The first cycle uses ``tau = 1`` and an even split. After each cycle the
    orchestrator aggregates, refreshes beta and delta, optionally lets
    ``refresh(profiles, rng, g)`` update the link and CPU description, and
    re-plans ``(tau, L, d_k)`` on what is left of the budget.

    Returns ``(w, TrainingReport)``.
    """
    profiles = list(profiles)
    K, d = len(profiles), task.total_samples
    if task.K != K:
        raise ValueError(f"task was built for {task.K} learners, fleet has {K}")
    cfg = config
    rng = np.random.default_rng([cfg.seed, 7])
    fleet = fleet_from_profiles(profiles, cfg.mode, d, cfg.T)
    tau_max = auto_tau_max(fleet, cfg.T, cfg.tau_hard_cap) if cfg.tau_max == "auto" else int(cfg.tau_max)
    if tau_max < 1:
        raise ValueError(f"tau_max must be >= 1, got {tau_max}")

    beta = cfg.beta_override if cfg.beta_override is not None else cfg.beta_init
    delta = cfg.delta_override if cfg.delta_override is not None else cfg.delta_init
    beta = min(beta, 1.0 / cfg.eta)
    state = TrainingState(w=task.initial_model(), T0=float(cfg.T))
    state.params = ConvergenceParams(cfg.eta, beta, delta, cfg.b0)
    state.schedule = _initial_schedule(d, K, cfg.policy)
    initial_loss = task.eval_loss(state.w)
    reduced = False
    status, message = "ok", ""

    while True:
        remaining = state.remaining_budget
        if not remaining > 0:
            break
        budget = fleet.with_budget(remaining)
        sched = state.schedule
        round_time = _cycle_time(budget, sched)
        if round_time > remaining:
            if state.round_index == 0:
                status = "infeasible"
                message = (f"a single tau=1 cycle on an even split needs {round_time:.6g} s "
                           f"but the budget is {cfg.T:.6g} s")
            break
        try:
            bound = float(objective(budget, state.params, sched.tau, sched.policy))
        except InfeasibleError:
            bound = math.inf

        datasets = task.round_batches(sched.batches, rng)
        w = state.w
        models = []
        for (X, y), n in zip(datasets, sched.batches):
            if n > 0:
                models.append(local_train(w, X, y, cfg.eta, sched.tau, task.kind, cfg.minibatch, rng))
            else:
                models.append(w.copy())
        w_new = aggregate(models, sched.batches)

        used = [(k, ds) for k, ds in enumerate(datasets) if sched.batches[k] > 0]
        weights = np.array([sched.batches[k] for k, _ in used], dtype=float)
        g_at_wk = [local_gradient(models[k], X, y, task.kind) for k, (X, y) in used]
        g_at_w = [local_gradient(w_new, X, y, task.kind) for _, (X, y) in used]
        fell_back = False
        if cfg.beta_override is None:
            beta, fell_back = estimate_beta(g_at_wk, g_at_w, [models[k] for k, _ in used], w_new,
                                            weights, previous=beta)
            beta = min(beta, 1.0 / cfg.eta)
        if cfg.delta_override is None:
            losses = [local_loss(w_new, X, y, task.kind) for _, (X, y) in used]
            delta = estimate_delta(g_at_w, weights, losses, cfg.delta_estimator)

        state.w = w_new
        state.elapsed += round_time
        state.round_index += 1
        state.logs.append(RoundLog(
            g=state.round_index, tau=sched.tau, L=sched.total_updates, batches=sched.batches.copy(),
            max_time_s=round_time, beta=beta, delta=delta, global_loss=task.eval_loss(w_new),
            bound=bound, remaining_before=remaining, reduced=reduced, beta_fallback=fell_back,
        ))
        logger.debug("round %d tau=%d time=%.4g loss=%.6g", state.round_index, sched.tau,
                     round_time, state.logs[-1].global_loss)

        if refresh is not None:
            profiles = list(refresh(profiles, rng, state.round_index))
        fleet = fleet_from_profiles(profiles, cfg.mode, d, cfg.T)
        state.params = ConvergenceParams(cfg.eta, beta, delta, cfg.b0)
        remaining = state.remaining_budget
        if not remaining > 0:
            break
        nxt, reduced = _plan(fleet.with_budget(remaining), state.params, tau_max, cfg.policy)
        if nxt is None:
            break
        state.schedule = nxt

    report = TrainingReport(
        w=state.w,
        logs=state.logs,
        initial_loss=initial_loss,
        final_loss=task.eval_loss(state.w),
        total_time=state.elapsed,
        tau_max=tau_max,
        accuracy=task.accuracy(state.w),
        status=status,
        message=message,
    )
    return state.w, report

"""Synthetic convex learners: local gradient descent on least-squares or logistic losses.

These supply the statistical side of a training run (losses, gradients, model
trajectories). Time is never measured here; it is charged from the cost model.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.special import expit

from .costs import OffloadMode
from .bounds import ConvergenceParams, h_tau

KINDS = ("quadratic", "logistic")


def local_loss(w, X, y, kind="logistic") -> float:
    z = X @ w
    if kind == "quadratic":
        return 0.5 * float(np.mean((z - y) ** 2))
    if kind == "logistic":
        return float(np.mean(np.logaddexp(0.0, z) - y * z))
    raise ValueError(f"unknown loss kind {kind!r}; expected one of {KINDS}")


def local_gradient(w, X, y, kind="logistic") -> np.ndarray:
    z = X @ w
    if kind == "quadratic":
        r = z - y
    elif kind == "logistic":
        r = expit(z) - y
    else:
        raise ValueError(f"unknown loss kind {kind!r}; expected one of {KINDS}")
    return X.T @ r / X.shape[0]


def global_loss(w, datasets, weights, kind="logistic") -> float:
    """Sample-weighted average of the local losses."""
    weights = np.asarray(weights, dtype=float)
    if not weights.sum() > 0:
        raise ValueError("total weight must be positive")
    losses = [local_loss(w, X, y, kind) if n > 0 else 0.0 for (X, y), n in zip(datasets, weights)]
    return float(np.dot(weights, losses) / weights.sum())


def global_gradient(w, datasets, weights, kind="logistic") -> np.ndarray:
    weights = np.asarray(weights, dtype=float)
    if not weights.sum() > 0:
        raise ValueError("total weight must be positive")
    g = np.zeros_like(np.asarray(w, dtype=float))
    for (X, y), n in zip(datasets, weights):
        if n > 0:
            g += n * local_gradient(w, X, y, kind)
    return g / weights.sum()


def local_update(w, X, y, eta, kind="logistic") -> np.ndarray:
    """One full-batch gradient step."""
    g = local_gradient(w, X, y, kind)
    if not np.all(np.isfinite(g)):
        bad = np.flatnonzero(~np.isfinite(g))
        raise FloatingPointError(
            f"non-finite gradient at coordinates {bad[:5].tolist()} "
            f"(|w|max={np.max(np.abs(w)):.3g}, n={X.shape[0]})"
        )
    return w - eta * g


def local_train(w, X, y, eta, tau, kind="logistic", minibatch=0, rng=None) -> np.ndarray:
    """``tau`` local iterations.

    With ``minibatch > 0`` each iteration is one reshuffled epoch of minibatch
    steps; otherwise it is a single full-batch step.
    """
    w = np.array(w, dtype=float)
    n = X.shape[0]
    for _ in range(tau):
        if minibatch and minibatch < n:
            order = rng.permutation(n)
            for start in range(0, n, minibatch):
                idx = order[start:start + minibatch]
                w = local_update(w, X[idx], y[idx], eta, kind)
        else:
            w = local_update(w, X, y, eta, kind)
    return w


def aggregate(models, weights) -> np.ndarray:
    """Weighted mean of local models; weights are renormalized by their sum."""
    weights = np.asarray(weights, dtype=float)
    total = weights.sum()
    if not total > 0:
        raise ValueError("cannot aggregate with zero total weight")
    out = np.zeros_like(np.asarray(models[0], dtype=float))
    for w_k, n in zip(models, weights):
        if n > 0:
            out += (n / total) * np.asarray(w_k, dtype=float)
    return out


@dataclass
class AuxiliaryTrack:
    """Centralized GD trajectory restarted from the aggregate at each global cycle."""

    v: np.ndarray
    start: int = 0
    steps: int = 0

    def reset(self, w, start):
        self.v = np.array(w, dtype=float)
        self.start = start
        self.steps = 0


def auxiliary_step(track: AuxiliaryTrack, eta, datasets, weights, kind="logistic") -> np.ndarray:
    track.v = track.v - eta * global_gradient(track.v, datasets, weights, kind)
    track.steps += 1
    return track.v


@dataclass(frozen=True)
class GradientCheck:
    max_error: float
    worst_index: int
    analytic: np.ndarray
    numeric: np.ndarray
    tolerance: float

    @property
    def ok(self) -> bool:
        return self.max_error < self.tolerance


# Central differences are exact on quadratics, so a wide step only trims rounding
# error there; the logistic step balances truncation against cancellation.
_FD_STEP = {"quadratic": 1e-3, "logistic": 1e-5}


def gradient_check(w, X, y, kind="logistic", step=None, tolerance=1e-5) -> GradientCheck:
    """Analytic gradient against central differences.

    The per-coordinate error is ``|g - g_fd| / max(1, |g|, |g_fd|)``: relative for
    large components, absolute for ones below unit magnitude (so zero gradients
    do not divide by zero).
    """
    w = np.asarray(w, dtype=float)
    analytic = local_gradient(w, X, y, kind)
    step = _FD_STEP[kind] if step is None else step
    numeric = np.empty_like(w)
    for i in range(w.size):
        e = np.zeros_like(w)
        e[i] = step
        numeric[i] = (local_loss(w + e, X, y, kind) - local_loss(w - e, X, y, kind)) / (2 * step)
    err = np.abs(analytic - numeric) / np.maximum(1.0, np.maximum(np.abs(analytic), np.abs(numeric)))
    worst = int(np.argmax(err)) if err.size else 0
    return GradientCheck(float(err.max(initial=0.0)), worst, analytic, numeric, tolerance)


# -- divergence-bound check --------------------------------------------------

@dataclass(frozen=True)
class DeviationReport:
    deviations: np.ndarray   # ||w[l] - v[l]|| for l = 0..tau
    bounds: np.ndarray       # h(l) for l = 0..tau
    beta: float
    delta: float

    @property
    def ok(self) -> bool:
        return bool(np.all(self.deviations <= self.bounds * (1 + 1e-9) + 1e-12))


def hessian_bound(datasets) -> float:
    """Largest local Hessian spectral norm of least-squares losses."""
    return max(float(np.linalg.eigvalsh(X.T @ X / X.shape[0])[-1]) for X, _ in datasets)


def deviation_check(w0, datasets, weights, eta, tau, kind="quadratic", beta=None) -> DeviationReport:
    """Run ``tau`` local steps from ``w0`` next to centralized GD and compare with ``h``.

    ``beta`` defaults to the exact smoothness of the quadratic losses. ``delta``
    is measured as the weighted mean over learners of the largest gradient
    divergence ``||grad F_k - grad F||`` seen at any model visited in the interval.
    """
    weights = np.asarray(weights, dtype=float)
    if beta is None:
        if kind != "quadratic":
            raise ValueError("beta must be given for non-quadratic losses")
        beta = hessian_bound(datasets)
    locals_ = [np.array(w0, dtype=float) for _ in datasets]
    track = AuxiliaryTrack(np.array(w0, dtype=float))
    visited = [np.array(w0, dtype=float)]
    deviations = [0.0]
    for _ in range(tau):
        locals_ = [local_update(w, X, y, eta, kind) for w, (X, y) in zip(locals_, datasets)]
        v = auxiliary_step(track, eta, datasets, weights, kind)
        w = aggregate(locals_, weights)
        deviations.append(float(np.linalg.norm(w - v)))
        visited.extend([w, v.copy(), *locals_])
    div = np.zeros(len(datasets))
    for p in visited:
        g = global_gradient(p, datasets, weights, kind)
        for k, (X, y) in enumerate(datasets):
            div[k] = max(div[k], float(np.linalg.norm(local_gradient(p, X, y, kind) - g)))
    delta = float(np.dot(weights, div) / weights.sum())
    params = ConvergenceParams(eta=eta, beta=beta, delta=delta, b0=1.0)
    bounds = np.array([0.0] + [h_tau(params, l) for l in range(1, tau + 1)])
    return DeviationReport(np.array(deviations), bounds, beta, delta)


# -- synthetic task ----------------------------------------------------------

@dataclass
class SyntheticTask:
    """Per-learner datasets with a controllable mean shift between learners.

    Learner ``k`` draws features from ``N(mu_k, I)`` with
    ``mu_k = heterogeneity * z_k`` and ``z_k ~ N(0, I/dim)``; targets come
    from a shared model (noisy linear for ``quadratic``, Bernoulli for
    ``logistic``). In OL mode the orchestrator owns the pooled data and
    re-partitions a shuffled copy every cycle. In FL mode learner ``k`` keeps a
    private pool and draws its batch from it.
    """

    kind: str
    dim: int
    K: int
    total_samples: int
    heterogeneity: float = 1.0
    seed: int = 0
    mode: OffloadMode = OffloadMode.OL
    test_samples: int = 2000
    fl_pool_factor: float = 2.0
    noise: float = 0.1
    pools: list = field(init=False, repr=False)
    X_eval: np.ndarray = field(init=False, repr=False)
    y_eval: np.ndarray = field(init=False, repr=False)
    X_test: np.ndarray = field(init=False, repr=False)
    y_test: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown task kind {self.kind!r}; expected one of {KINDS}")
        if self.dim < 1 or self.K < 1 or self.total_samples < self.K:
            raise ValueError("need dim >= 1, K >= 1 and total_samples >= K")
        if self.heterogeneity < 0:
            raise ValueError("heterogeneity must be >= 0")
        self.mode = OffloadMode(self.mode)
        rng = np.random.default_rng(self.seed)
        self.w_true = rng.standard_normal(self.dim) * (2.0 / math.sqrt(self.dim))
        self.shifts = self.heterogeneity * rng.standard_normal((self.K, self.dim)) / math.sqrt(self.dim)
        base = self.total_samples // self.K
        counts = np.full(self.K, base)
        counts[: self.total_samples - counts.sum()] += 1
        pool_size = counts if self.mode is OffloadMode.OL else np.maximum(
            counts, np.ceil(self.fl_pool_factor * self.total_samples / self.K).astype(int))
        self.pools = [self._draw(rng, k, n) for k, n in enumerate(pool_size)]
        self.X_eval = np.concatenate([X[:n] for (X, _), n in zip(self.pools, counts)])
        self.y_eval = np.concatenate([y[:n] for (_, y), n in zip(self.pools, counts)])
        groups = rng.integers(0, self.K, size=self.test_samples)
        test = [self._draw(rng, k, int(np.sum(groups == k))) for k in range(self.K)]
        self.X_test = np.concatenate([X for X, _ in test])
        self.y_test = np.concatenate([y for _, y in test])
        self.w0 = 0.01 * rng.standard_normal(self.dim)

    def _draw(self, rng, k, n):
        X = self.shifts[k] + rng.standard_normal((n, self.dim))
        z = X @ self.w_true
        if self.kind == "quadratic":
            y = z + self.noise * rng.standard_normal(n)
        else:
            y = (rng.random(n) < expit(z)).astype(float)
        return X, y

    def round_batches(self, batches: Sequence[int], rng) -> list:
        """Datasets for one global cycle, one per learner (possibly empty)."""
        batches = [int(n) for n in batches]
        if self.mode is OffloadMode.OL:
            if sum(batches) > self.X_eval.shape[0]:
                raise ValueError("allocation exceeds the dataset size")
            order = rng.permutation(self.X_eval.shape[0])
            out, start = [], 0
            for n in batches:
                idx = order[start:start + n]
                out.append((self.X_eval[idx], self.y_eval[idx]))
                start += n
            return out
        out = []
        for (X, y), n in zip(self.pools, batches):
            idx = rng.permutation(X.shape[0])
            idx = np.resize(idx, n)  # cycles through the pool when n exceeds it
            out.append((X[idx], y[idx]))
        return out

    def eval_loss(self, w) -> float:
        return local_loss(w, self.X_eval, self.y_eval, self.kind)

    def accuracy(self, w) -> Optional[float]:
        """Held-out accuracy for the logistic task; ``None`` otherwise."""
        if self.kind != "logistic":
            return None
        pred = (self.X_test @ w) > 0
        return float(np.mean(pred == (self.y_test > 0.5)))

    def initial_model(self) -> np.ndarray:
        return self.w0.copy()

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import melsched.learners as mod
from melsched.costs import OffloadMode
from melsched.learners import (
    AuxiliaryTrack,
    SyntheticTask,
    aggregate,
    auxiliary_step,
    deviation_check,
    global_gradient,
    global_loss,
    gradient_check,
    hessian_bound,
    local_gradient,
    local_loss,
    local_train,
    local_update,
)


def identity_data(dim=2):
    """Least squares on X = sqrt(n) I rows against y = 0, i.e. F(w) = ||w||^2 / 2."""
    X = np.eye(dim) * np.sqrt(dim)
    return X, np.zeros(dim)


def test_identity_quadratic_update():
    X, y = identity_data()
    assert np.allclose(local_gradient(np.array([1.0, -2.0]), X, y, "quadratic"), [1.0, -2.0])
    assert np.allclose(local_update(np.array([1.0, 1.0]), X, y, 0.1, "quadratic"), [0.9, 0.9])
    assert np.array_equal(local_update(np.array([1.0, 1.0]), X, y, 0.0, "quadratic"), [1.0, 1.0])


def test_logistic_loss_at_zero_is_log2():
    X = np.random.default_rng(0).standard_normal((10, 3))
    y = (np.arange(10) % 2).astype(float)
    assert local_loss(np.zeros(3), X, y, "logistic") == pytest.approx(np.log(2.0), rel=1e-15)


def test_unknown_kind():
    X, y = identity_data()
    with pytest.raises(ValueError):
        local_loss(np.zeros(2), X, y, "hinge")
    with pytest.raises(ValueError):
        local_gradient(np.zeros(2), X, y, "hinge")


def test_weighted_global_loss():
    # local losses 0 and 0.4 with weights 1 and 3 give 0.3
    X0, y0 = np.zeros((1, 1)), np.zeros(1)
    X1, y1 = np.ones((1, 1)), np.array([np.sqrt(0.8)])
    assert local_loss(np.zeros(1), X1, y1, "quadratic") == pytest.approx(0.4)
    assert global_loss(np.zeros(1), [(X0, y0), (X1, y1)], [1, 3], "quadratic") == pytest.approx(0.3)
    assert global_loss(np.zeros(1), [(X0, y0), (X1, y1)], [1, 1], "quadratic") == pytest.approx(0.2)


def test_identical_datasets_global_equals_local():
    rng = np.random.default_rng(1)
    X, y = rng.standard_normal((30, 4)), rng.random(30).round()
    w = rng.standard_normal(4)
    assert global_loss(w, [(X, y)] * 3, [30] * 3) == pytest.approx(local_loss(w, X, y))
    assert np.allclose(global_gradient(w, [(X, y)] * 3, [5, 7, 9]), local_gradient(w, X, y))


def test_zero_total_weight_rejected():
    X, y = identity_data()
    with pytest.raises(ValueError):
        global_loss(np.zeros(2), [(X, y)], [0])
    with pytest.raises(ValueError):
        aggregate([np.zeros(2)], [0])


def test_aggregate_examples():
    assert np.allclose(aggregate([np.array([1.0, 3.0]), np.array([3.0, 5.0])], [2, 2]), [2.0, 4.0])
    assert np.allclose(aggregate([np.array([0.0]), np.array([4.0])], [1, 3]), [3.0])
    assert np.array_equal(aggregate([np.array([1.5, -2.0])], [7]), [1.5, -2.0])


def test_nonfinite_gradient_raises():
    X = np.array([[np.inf, 1.0]])
    with pytest.raises(FloatingPointError):
        local_update(np.array([1.0, 1.0]), X, np.array([0.0]), 0.1, "quadratic")


def test_minibatch_training_runs_epochs():
    rng = np.random.default_rng(2)
    X = rng.standard_normal((40, 3))
    y = X @ np.array([1.0, -1.0, 0.5])
    w_full = local_train(np.zeros(3), X, y, 0.1, 5, "quadratic")
    w_mini = local_train(np.zeros(3), X, y, 0.1, 5, "quadratic", minibatch=8, rng=np.random.default_rng(0))
    loss0 = local_loss(np.zeros(3), X, y, "quadratic")
    assert local_loss(w_mini, X, y, "quadratic") < local_loss(w_full, X, y, "quadratic") < loss0


def test_auxiliary_track_is_centralized_gd():
    rng = np.random.default_rng(3)
    data = [(rng.standard_normal((10, 2)), rng.standard_normal(10)) for _ in range(2)]
    track = AuxiliaryTrack(np.zeros(2))
    v = auxiliary_step(track, 0.1, data, [10, 10], "quadratic")
    assert np.allclose(v, -0.1 * global_gradient(np.zeros(2), data, [10, 10], "quadratic"))
    assert track.steps == 1
    track.reset(np.ones(2), start=4)
    assert (track.steps, track.start) == (0, 4)


def test_gradient_check_catches_wrong_gradient(monkeypatch):
    rng = np.random.default_rng(4)
    X, y = rng.standard_normal((20, 3)), rng.random(20).round()
    assert gradient_check(rng.standard_normal(3), X, y, "logistic").ok
    monkeypatch.setattr(mod, "local_gradient", lambda w, X, y, kind: np.zeros_like(w) + 1.0)
    assert not mod.gradient_check(np.zeros(3), X, y, "logistic").ok


def test_single_learner_has_no_deviation():
    task = SyntheticTask("quadratic", 4, 1, 50, seed=0)
    rep = deviation_check(np.zeros(4), task.pools, [50], 0.05, 10)
    assert np.allclose(rep.deviations, 0.0, atol=1e-14)
    assert rep.ok


def test_hessian_bound_matches_eigenvalue():
    X = np.diag([1.0, 2.0, 3.0])
    assert hessian_bound([(X, np.zeros(3))]) == pytest.approx(9.0 / 3.0)


def test_deviation_check_needs_beta_for_logistic():
    task = SyntheticTask("logistic", 3, 2, 40, seed=0)
    with pytest.raises(ValueError):
        deviation_check(np.zeros(3), task.pools, [20, 20], 0.1, 3, kind="logistic")


def test_task_is_reproducible():
    a, b = SyntheticTask("logistic", 5, 3, 90, seed=7), SyntheticTask("logistic", 5, 3, 90, seed=7)
    assert np.array_equal(a.X_eval, b.X_eval) and np.array_equal(a.w0, b.w0)
    c = SyntheticTask("logistic", 5, 3, 90, seed=8)
    assert not np.array_equal(a.X_eval, c.X_eval)


def test_initial_model_is_a_copy():
    task = SyntheticTask("logistic", 5, 3, 90, seed=7)
    w = task.initial_model()
    w[:] = 99
    assert not np.any(task.initial_model() == 99)


def test_ol_round_batches_partition_the_data():
    task = SyntheticTask("quadratic", 3, 3, 30, seed=1)
    parts = task.round_batches([10, 0, 15], np.random.default_rng(0))
    assert [X.shape[0] for X, _ in parts] == [10, 0, 15]
    rows = np.concatenate([X for X, _ in parts])
    assert len({tuple(r) for r in rows}) == 25
    with pytest.raises(ValueError):
        task.round_batches([20, 20, 20], np.random.default_rng(0))


def test_fl_round_batches_stay_on_private_pools():
    task = SyntheticTask("quadratic", 3, 2, 20, seed=1, mode=OffloadMode.FL, fl_pool_factor=1.5)
    assert [X.shape[0] for X, _ in task.pools] == [15, 15]
    parts = task.round_batches([40, 3], np.random.default_rng(0))
    own = {tuple(r) for r in task.pools[0][0]}
    assert parts[0][0].shape[0] == 40
    assert all(tuple(r) in own for r in parts[0][0])


def test_accuracy_only_for_logistic():
    assert SyntheticTask("quadratic", 3, 2, 20).accuracy(np.zeros(3)) is None
    task = SyntheticTask("logistic", 3, 2, 20, test_samples=500)
    assert 0.0 <= task.accuracy(task.w_true) <= 1.0
    assert task.accuracy(task.w_true) > 0.6


@pytest.mark.parametrize("kwargs", [
    dict(kind="svm", dim=2, K=2, total_samples=10),
    dict(kind="logistic", dim=0, K=2, total_samples=10),
    dict(kind="logistic", dim=2, K=5, total_samples=4),
    dict(kind="logistic", dim=2, K=2, total_samples=10, heterogeneity=-1),
])
def test_invalid_task(kwargs):
    with pytest.raises(ValueError):
        SyntheticTask(**kwargs)


@given(st.lists(st.floats(-1e3, 1e3), min_size=3, max_size=3), st.lists(st.integers(1, 100), min_size=3, max_size=3))
def test_aggregate_is_convex_combination(vals, weights):
    models = [np.array([v]) for v in vals]
    out = aggregate(models, weights)[0]
    assert min(vals) - 1e-9 <= out <= max(vals) + 1e-9


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from(["quadratic", "logistic"]))
def test_gradients_pass_finite_differences(seed, kind):
    rng = np.random.default_rng(seed)
    task = SyntheticTask(kind, int(rng.integers(1, 15)), 2, 200, heterogeneity=2.0, seed=seed)
    X, y = task.pools[0]
    rep = gradient_check(rng.standard_normal(task.dim), X, y, kind)
    assert rep.max_error < (1e-9 if kind == "quadratic" else 1e-5)

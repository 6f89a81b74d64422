import threading

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pqselect.classify import KnnConfig, NbConfig, fit, predict
from pqselect.evalcore import (BudgetExhausted, Criterion, FitnessCache, SearchTracker, evaluate,
                               make_folds)
from pqselect.features import Dataset


@settings(max_examples=60, deadline=None)
@given(counts=st.lists(st.integers(10, 40), min_size=2, max_size=6), seed=st.integers(0, 10 ** 6))
def test_folds_are_stratified_and_balanced(counts, seed):
    y = np.concatenate([np.full(c, i + 1) for i, c in enumerate(counts)])
    plan = make_folds(y, seed)
    sizes = np.bincount(plan.folds, minlength=10)
    assert sizes.max() - sizes.min() <= 1
    for i, c in enumerate(counts):
        per_fold = np.bincount(plan.folds[y == i + 1], minlength=10)
        assert per_fold.max() - per_fold.min() <= 1
        assert per_fold.sum() == c
    for f in range(10):
        assert set(plan.test_rows(f)).isdisjoint(plan.train_rows(f))
        assert plan.test_rows(f).size + plan.train_rows(f).size == y.size


def test_fold_plan_is_seeded():
    y = np.repeat([1, 2, 3], 20)
    np.testing.assert_array_equal(make_folds(y, 4).folds, make_folds(y, 4).folds)
    assert not np.array_equal(make_folds(y, 4).folds, make_folds(y, 5).folds)


def test_classes_smaller_than_fold_count_are_rejected():
    with pytest.raises(ValueError):
        make_folds(np.array([1] * 20 + [2] * 9), 0)


@pytest.mark.parametrize("config", [KnnConfig(), NbConfig(0.05)])
def test_criterion_equals_mean_fold_error_from_scratch(toy, config):
    plan = make_folds(toy, 3)
    mask = np.zeros(toy.n_features, bool)
    mask[[0, 2, 5]] = True
    errors = []
    for f in range(10):
        tr, te = plan.train_rows(f), plan.test_rows(f)
        model = fit(toy.X[tr], toy.y[tr], mask, config)
        errors.append(np.mean(predict(model, toy.X[te]) != toy.y[te]))
    rep = evaluate(toy, mask, config, plan)
    assert rep.j == pytest.approx(np.mean(errors), abs=1e-15)
    assert rep.fold_errors == pytest.approx(errors, abs=1e-15)
    assert rep.j + rep.theta == 1.0
    assert rep.confusion.sum() == toy.n_rows


def test_confusion_diagonal_matches_accuracy(toy_criterion, toy):
    rep = toy_criterion.evaluate(np.ones(toy.n_features, bool))
    wrong = rep.confusion.sum() - np.trace(rep.confusion)
    # equal fold sizes make the pooled and per-fold error rates coincide
    assert wrong / toy.n_rows == pytest.approx(rep.j)


def test_separable_classes_give_zero_error():
    rng = np.random.default_rng(0)
    y = np.repeat([1, 2], 30)
    X = np.column_stack([y * 10.0 + rng.uniform(0, 1, 60), rng.uniform(0, 1, 60)])
    crit = Criterion(Dataset(X, y), KnnConfig(), make_folds(y, 0))
    assert crit.evaluate(np.array([True, False])).j == 0.0


def test_empty_subset_scores_worst(toy_criterion, toy):
    rep = toy_criterion.evaluate(np.zeros(toy.n_features, bool))
    assert rep.j == 1.0 and rep.confusion is None


def test_wrong_mask_length_is_rejected(toy_criterion):
    with pytest.raises(ValueError):
        toy_criterion.evaluate(np.ones(3, bool))


def test_cache_hits_count_as_queries_but_skip_computation(toy_criterion):
    crit = toy_criterion.spawn()
    m = np.zeros(crit.n_features, bool)
    m[:3] = True
    assert crit(m) == crit(m)
    assert crit.queries == 2
    assert crit.computed == 1
    crit.evaluate(m)
    assert crit.queries == 2


def test_spawn_gives_fresh_counters_and_same_values(toy_criterion):
    m = np.arange(toy_criterion.n_features) % 2 == 0
    a, b = toy_criterion.spawn(), toy_criterion.spawn()
    assert a(m) == b(m)
    assert a.queries == b.queries == 1


def test_uncached_criterion_recomputes(toy):
    crit = Criterion(toy, KnnConfig(), make_folds(toy, 0), cache=False)
    m = np.ones(toy.n_features, bool)
    crit(m), crit(m)
    assert crit.computed == 2


def test_cache_survives_concurrent_use():
    cache = FitnessCache()
    masks = [np.array([(i >> b) & 1 for b in range(10)], bool) for i in range(200)]

    def work():
        for i, m in enumerate(masks):
            cache.insert(m, i)
            assert cache.lookup(m) == i

    threads = [threading.Thread(target=work) for _ in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert len(cache) == 200


def test_cache_keys_distinguish_lengths():
    assert FitnessCache.key(np.zeros(8, bool)) != FitnessCache.key(np.zeros(9, bool))


def test_tracker_enforces_budget_and_keeps_best_so_far(toy_criterion):
    tr = SearchTracker(toy_criterion.spawn(), 3)
    n = tr.n_features
    masks = [np.ones(n, bool), np.arange(n) < 3, np.arange(n) >= 3]
    js = [tr.evaluate(m) for m in masks]
    assert tr.remaining == 0
    with pytest.raises(BudgetExhausted):
        tr.evaluate(masks[0])
    assert tr.j_trace == list(np.minimum.accumulate(js))
    assert tr.best_j == min(js)
    rec = tr.record("X", 1, {})
    assert rec.fes_used == 3 and rec.xi == int(tr.best_mask.sum())


def test_tracker_rejects_zero_budget(toy_criterion):
    with pytest.raises(ValueError):
        SearchTracker(toy_criterion, 0)

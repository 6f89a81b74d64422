"""Wrapper criterion: stratified 10-fold cross-validated classification error.

``J(X)`` is the mean over folds of the misclassified fraction of each held-out
fold when the classifier is trained on the other folds using only the columns
in ``X``. One :class:`FoldPlan` is fixed per experiment and shared by every
algorithm, so ``J`` is a deterministic function of the mask.

Per-fold scaling, k-NN training matrices and the naive-Bayes log-density
tables do not depend on the subset; :class:`Criterion` builds them once and
each query only touches the selected columns.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass

import numpy as np

from .classify import fit_all, mask_to_cols, nb_decide
from .features import Dataset
from .metrics import RunRecord
from .synth import N_CLASSES


@dataclass(frozen=True)
class FoldPlan:
    folds: np.ndarray   # fold id per row
    seed: int
    n_folds: int = 10

    def test_rows(self, f: int) -> np.ndarray:
        return np.flatnonzero(self.folds == f)

    def train_rows(self, f: int) -> np.ndarray:
        return np.flatnonzero(self.folds != f)


def make_folds(data, seed: int, n_folds: int = 10) -> FoldPlan:
    """Shuffle each class with ``seed`` and deal its rows round-robin to folds.

    The dealing position carries over from one class to the next so fold
    sizes stay within one row of each other.
    """
    y = data.y if isinstance(data, Dataset) else np.asarray(data)
    rng = np.random.default_rng(np.random.SeedSequence(int(seed)))
    folds = np.empty(y.size, dtype=np.intp)
    pos = 0
    for c in np.unique(y):
        rows = np.flatnonzero(y == c)
        if rows.size < n_folds:
            raise ValueError(f"class v{c} has {rows.size} rows; need >= {n_folds}")
        rows = rows[rng.permutation(rows.size)]
        folds[rows] = (pos + np.arange(rows.size)) % n_folds
        pos = (pos + rows.size) % n_folds
    return FoldPlan(folds, int(seed), n_folds)


@dataclass(frozen=True)
class EvaluationReport:
    j: float
    fold_errors: tuple
    confusion: np.ndarray | None  # [true - 1, predicted - 1], None for the empty subset

    @property
    def theta(self) -> float:
        return 1.0 - self.j


class FitnessCache:
    """Exact-mask memo; safe for concurrent lookup and insert."""

    def __init__(self):
        self._d = {}
        self._lock = threading.Lock()

    @staticmethod
    def key(mask) -> bytes:
        return np.packbits(np.asarray(mask, dtype=bool)).tobytes() + \
            len(mask).to_bytes(4, "little")

    def lookup(self, mask):
        with self._lock:
            return self._d.get(self.key(mask))

    def insert(self, mask, report: EvaluationReport) -> None:
        with self._lock:
            self._d.setdefault(self.key(mask), report)

    def __len__(self):
        return len(self._d)


class _Fold:
    __slots__ = ("model", "z_test", "y_test", "test_idx", "nb_table")

    def __init__(self, data: Dataset, plan: FoldPlan, f: int, config):
        tr, te = plan.train_rows(f), plan.test_rows(f)
        self.model = fit_all(data.X[tr], data.y[tr], config)
        self.z_test = self.model.scaler.transform(data.X[te])
        self.y_test = data.y[te]
        self.nb_table = None

    def predict(self, cols: np.ndarray) -> np.ndarray:
        m = self.model
        if m.kind == "nb":
            if self.nb_table is None:
                all_cols = np.arange(self.z_test.shape[1], dtype=np.intp)
                self.nb_table = m.log_density(self.z_test, all_cols)
            return m.classes[nb_decide(m.log_prior, self.nb_table, cols)]
        return m.classes[m.predict_index(self.z_test, cols)]


class Criterion:
    """``J`` for one (dataset, classifier, fold plan) triple.

    ``evaluate`` returns a full report without touching the query counter;
    calling the object (``crit(mask)``) counts one function evaluation and
    returns ``J``. Cache hits still count. ``spawn`` gives a fresh counter and
    cache over the same precomputed folds.
    """

    def __init__(self, data: Dataset, config, plan: FoldPlan, cache: bool = True,
                 _folds=None):
        if plan.folds.size != data.n_rows:
            raise ValueError("fold plan does not match dataset rows")
        self.data = data
        self.config = config
        self.plan = plan
        self.n_features = data.n_features
        self._folds = _folds if _folds is not None else [
            _Fold(data, plan, f, config) for f in range(plan.n_folds)
        ]
        self.cache = FitnessCache() if cache else None
        self.queries = 0
        self.computed = 0

    def spawn(self) -> "Criterion":
        return Criterion(self.data, self.config, self.plan,
                         cache=self.cache is not None, _folds=self._folds)

    def evaluate(self, mask) -> EvaluationReport:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != (self.n_features,):
            raise ValueError(f"mask length {mask.size} != {self.n_features} features")
        if self.cache is not None:
            hit = self.cache.lookup(mask)
            if hit is not None:
                return hit
        report = self._compute(mask)
        if self.cache is not None:
            self.cache.insert(mask, report)
        return report

    def _compute(self, mask: np.ndarray) -> EvaluationReport:
        cols = mask_to_cols(mask)
        if cols.size == 0:
            return EvaluationReport(1.0, (1.0,) * self.plan.n_folds, None)
        self.computed += 1
        errors = []
        confusion = np.zeros((N_CLASSES, N_CLASSES), dtype=np.int64)
        for fold in self._folds:
            pred = fold.predict(cols)
            errors.append(float(np.count_nonzero(pred != fold.y_test)) / fold.y_test.size)
            np.add.at(confusion, (fold.y_test - 1, pred - 1), 1)
        return EvaluationReport(float(np.mean(errors)), tuple(errors), confusion)

    def __call__(self, mask) -> float:
        self.queries += 1
        return self.evaluate(mask).j


def evaluate(data: Dataset, subset, config, plan: FoldPlan) -> EvaluationReport:
    return Criterion(data, config, plan, cache=False).evaluate(subset)


class BudgetExhausted(RuntimeError):
    pass


class SearchTracker:
    """Budgeted access to a criterion, recording the best-so-far trace."""

    def __init__(self, criterion: Criterion, budget: int):
        if budget < 1:
            raise ValueError("budget must be >= 1")
        self.criterion = criterion
        self.budget = int(budget)
        self.used = 0
        self.best_mask = None
        self.best_j = float("inf")
        self.j_trace = []
        self.xi_trace = []

    @property
    def n_features(self) -> int:
        return self.criterion.n_features

    @property
    def remaining(self) -> int:
        return self.budget - self.used

    def evaluate(self, mask) -> float:
        if self.used >= self.budget:
            raise BudgetExhausted(f"budget of {self.budget} evaluations used up")
        mask = np.asarray(mask, dtype=bool).copy()
        j = self.criterion(mask)
        self.used += 1
        if j < self.best_j:
            self.best_j = j
            self.best_mask = mask
        self.j_trace.append(self.best_j)
        self.xi_trace.append(int(np.count_nonzero(self.best_mask)))
        return j

    def record(self, algorithm: str, seed: int, config: dict) -> RunRecord:
        return RunRecord(algorithm, int(seed), self.best_mask, self.best_j, self.used,
                         list(self.j_trace), list(self.xi_trace), dict(config))

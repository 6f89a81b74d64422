"""k-nearest-neighbour and kernel-density naive Bayes classifiers.

Features are min-max scaled with parameters from the training rows only;
query rows are scaled the same way and clipped to [0, 1]. A fitted model keeps
its per-feature structures for *all* columns, so restricting it to a different
feature subset (``with_subset``) costs nothing.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import kernels

DENSITY_FLOOR = 1e-300


@dataclass(frozen=True)
class KnnConfig:
    k: int = 3
    metric: str = "manhattan"

    kind = "knn"

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.metric not in ("manhattan", "euclidean"):
            raise ValueError(f"unknown metric {self.metric!r}")

    def to_dict(self):
        return {"kind": "knn", "k": self.k, "metric": self.metric}


@dataclass(frozen=True)
class NbConfig:
    kernel_width: float = 0.004

    kind = "nb"

    def __post_init__(self):
        if not self.kernel_width > 0:
            raise ValueError("kernel width must be positive")

    def to_dict(self):
        return {"kind": "nb", "kernel_width": self.kernel_width}


def classifier_from_dict(d: dict):
    d = dict(d)
    kind = d.pop("kind", "knn")
    if kind == "knn":
        return KnnConfig(**d)
    if kind == "nb":
        return NbConfig(**d)
    raise ValueError(f"unknown classifier kind {kind!r}")


@dataclass(frozen=True)
class MinMaxScaler:
    lo: np.ndarray
    span: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray) -> "MinMaxScaler":
        lo = X.min(axis=0)
        return cls(lo, X.max(axis=0) - lo)

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        safe = np.where(self.span > 0, self.span, 1.0)
        Z = np.where(self.span > 0, (X - self.lo) / safe, 0.0)
        return np.ascontiguousarray(np.clip(Z, 0.0, 1.0))


def mask_to_cols(mask) -> np.ndarray:
    return np.flatnonzero(np.asarray(mask, dtype=bool)).astype(np.intp)


@dataclass(frozen=True)
class FittedModel:
    config: object
    scaler: MinMaxScaler
    classes: np.ndarray        # sorted labels present in training
    cols: np.ndarray           # selected feature indices
    train_t: np.ndarray        # k-NN: normalised training data, features x rows
    train_idx: np.ndarray      # k-NN: class index per training row
    grouped: np.ndarray = None  # NB: per-feature values, class segments, sorted
    offsets: np.ndarray = None
    log_prior: np.ndarray = None

    @property
    def kind(self) -> str:
        return self.config.kind

    def with_subset(self, mask) -> "FittedModel":
        cols = mask_to_cols(mask)
        if cols.size == 0:
            raise ValueError("empty feature subset")
        return replace(self, cols=cols)

    def predict_index(self, Z: np.ndarray, cols=None) -> np.ndarray:
        """Class indices for already-normalised rows ``Z``."""
        cols = self.cols if cols is None else cols
        if self.kind == "knn":
            metric = kernels.MANHATTAN if self.config.metric == "manhattan" else kernels.EUCLIDEAN
            return kernels.knn_predict(self.train_t, self.train_idx, Z, cols,
                                       self.config.k, metric, self.classes.size)
        table = self.log_density(Z, cols)
        return nb_decide(self.log_prior, table)

    def log_density(self, Z: np.ndarray, cols=None) -> np.ndarray:
        cols = self.cols if cols is None else cols
        return kernels.nb_log_density(self.grouped, self.offsets, Z, cols,
                                      self.config.kernel_width)


def nb_decide(log_prior: np.ndarray, table: np.ndarray, col_idx=None) -> np.ndarray:
    """Arg-max of log prior plus summed log densities; ties go to the lowest class."""
    sel = table if col_idx is None else table[:, :, col_idx]
    score = log_prior[None, :] + sel.sum(axis=2)
    return np.argmax(score, axis=1).astype(np.intp)


def fit_all(X, y, config) -> FittedModel:
    """Fit on every column; restrict with :meth:`FittedModel.with_subset`."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    scaler = MinMaxScaler.fit(X)
    Z = scaler.transform(X)
    classes, idx = np.unique(y, return_inverse=True)
    idx = idx.astype(np.intp)
    all_cols = np.arange(X.shape[1], dtype=np.intp)
    train_t = np.ascontiguousarray(Z.T)
    if config.kind == "knn":
        return FittedModel(config, scaler, classes, all_cols, train_t, idx)

    order = np.argsort(idx, kind="stable")
    counts = np.bincount(idx, minlength=classes.size)
    offsets = np.concatenate([[0], np.cumsum(counts)]).astype(np.intp)
    grouped = train_t[:, order].copy()
    for g in range(classes.size):
        grouped[:, offsets[g]:offsets[g + 1]].sort(axis=1)
    log_prior = np.log(counts / counts.sum())
    return FittedModel(config, scaler, classes, all_cols, train_t, idx,
                       np.ascontiguousarray(grouped), offsets, log_prior)


def fit(X, y, mask, config) -> FittedModel:
    return fit_all(X, y, config).with_subset(mask)


def predict(model: FittedModel, rows) -> np.ndarray:
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    return model.classes[model.predict_index(model.scaler.transform(rows))]

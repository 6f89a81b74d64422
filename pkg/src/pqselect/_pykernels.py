"""NumPy implementations of the criterion hot loops.

Used when the compiled extension is unavailable or ``PQSELECT_PURE_PYTHON`` is
set. Signatures match ``pqselect._ckernels``.
"""

import numpy as np

_DENSITY_FLOOR = 1e-300


def knn_predict(train_t, train_labels, test, cols, k, metric, n_classes):
    n_test = test.shape[0]
    n_train = train_t.shape[1]
    k = min(k, n_train)
    dist = np.zeros((n_test, n_train))
    for c in cols:
        diff = test[:, c, None] - train_t[c][None, :]
        if metric == 0:
            dist += np.abs(diff)
        else:
            dist += diff * diff

    labels = np.broadcast_to(train_labels, dist.shape)
    order = np.lexsort((labels, dist), axis=-1)[:, :k]
    nl = train_labels[order]

    votes = np.zeros((n_test, n_classes), dtype=np.intp)
    rows = np.arange(n_test)
    for a in range(k):
        votes[rows, nl[:, a]] += 1
    tied = votes == votes.max(axis=1, keepdims=True)
    first = np.argmax(tied[rows[:, None], nl], axis=1)
    return nl[rows, first].astype(np.intp)


def nb_log_density(grouped, offsets, test, cols, sigma):
    n_test = test.shape[0]
    n_classes = len(offsets) - 1
    out = np.empty((n_test, n_classes, len(cols)))
    norm = sigma * np.sqrt(2.0 * np.pi)
    for ci, c in enumerate(cols):
        x = test[:, c, None]
        for g in range(n_classes):
            seg = grouped[c, offsets[g]:offsets[g + 1]]
            z = (x - seg[None, :]) / sigma
            dens = np.exp(-0.5 * z * z).sum(axis=1) / (len(seg) * norm)
            out[:, g, ci] = np.log(np.maximum(dens, _DENSITY_FLOOR))
    return out

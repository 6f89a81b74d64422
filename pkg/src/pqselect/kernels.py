"""Backend selection for the criterion hot loops.

The compiled ``_ckernels`` extension is preferred. Setting the environment
variable ``PQSELECT_PURE_PYTHON=1`` (or failing to build the extension) selects
the NumPy fallback in ``_pykernels``.
"""

import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("PQSELECT_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels

MANHATTAN = 0
EUCLIDEAN = 1


def knn_predict(train_t, train_labels, test, cols, k, metric, n_classes):
    """Predict class indices for ``test`` rows by k-NN over the columns ``cols``.

    ``train_t`` is the feature-major (features x rows) training matrix.
    Neighbours are ordered by (distance, label); vote ties go to the class of
    the nearest neighbour among the tied classes.
    """
    return _impl.knn_predict(train_t, train_labels, test, cols, k, metric, n_classes)


def nb_log_density(grouped, offsets, test, cols, sigma):
    """Per-class Gaussian-kernel log densities, shape (test rows, classes, cols).

    ``grouped`` holds each feature's training values arranged class by class,
    ascending inside each class segment; ``offsets`` delimits the segments.
    """
    return _impl.nb_log_density(grouped, offsets, test, cols, sigma)

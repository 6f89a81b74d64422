# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops for the wrapper criterion.

Both functions mirror ``pqselect._pykernels`` argument for argument. The k-NN
distance accumulation performs the same floating-point operations in the same
order as the NumPy version, so predictions agree bitwise between backends.
"""

import numpy as np

from libc.math cimport exp, fabs, log, sqrt, M_PI


cdef double _DENSITY_FLOOR = 1e-300
# exp(-0.5 * 40**2) underflows to exactly 0.0, so points further away add nothing.
cdef double _WINDOW_SIGMAS = 40.0


def knn_predict(const double[:, ::1] train_t,
                const Py_ssize_t[::1] train_labels,
                const double[:, ::1] test,
                const Py_ssize_t[::1] cols,
                Py_ssize_t k,
                int metric,
                Py_ssize_t n_classes):
    cdef Py_ssize_t n_test = test.shape[0]
    cdef Py_ssize_t n_train = train_t.shape[1]
    cdef Py_ssize_t n_cols = cols.shape[0]
    cdef Py_ssize_t kk = k if k < n_train else n_train
    cdef Py_ssize_t q, ci, c, j, a, b, lab, best_count, winner
    cdef double t, diff, dj

    out = np.empty(n_test, dtype=np.intp)
    cdef Py_ssize_t[::1] pred = out
    cdef double[::1] dist = np.empty(n_train, dtype=np.float64)
    cdef double[::1] nd = np.empty(kk, dtype=np.float64)
    cdef Py_ssize_t[::1] nl = np.empty(kk, dtype=np.intp)
    cdef Py_ssize_t[::1] votes = np.zeros(n_classes, dtype=np.intp)
    cdef const double[::1] row
    cdef Py_ssize_t filled

    for q in range(n_test):
        for j in range(n_train):
            dist[j] = 0.0
        for ci in range(n_cols):
            c = cols[ci]
            t = test[q, c]
            row = train_t[c]
            if metric == 0:
                for j in range(n_train):
                    dist[j] += fabs(t - row[j])
            else:
                for j in range(n_train):
                    diff = t - row[j]
                    dist[j] += diff * diff

        # k smallest by (distance, label), kept sorted by insertion
        filled = 0
        for j in range(n_train):
            dj = dist[j]
            lab = train_labels[j]
            if filled == kk:
                if dj > nd[kk - 1] or (dj == nd[kk - 1] and lab >= nl[kk - 1]):
                    continue
                a = kk - 1
            else:
                a = filled
                filled += 1
            while a > 0 and (dj < nd[a - 1] or (dj == nd[a - 1] and lab < nl[a - 1])):
                nd[a] = nd[a - 1]
                nl[a] = nl[a - 1]
                a -= 1
            nd[a] = dj
            nl[a] = lab

        for a in range(n_classes):
            votes[a] = 0
        best_count = 0
        for a in range(kk):
            votes[nl[a]] += 1
            if votes[nl[a]] > best_count:
                best_count = votes[nl[a]]
        # nearest neighbour among the tied classes wins
        winner = nl[0]
        for a in range(kk):
            if votes[nl[a]] == best_count:
                winner = nl[a]
                break
        pred[q] = winner
    return out


cdef inline Py_ssize_t _lower_bound(const double[::1] v, Py_ssize_t lo,
                                    Py_ssize_t hi, double x) noexcept nogil:
    cdef Py_ssize_t mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if v[mid] < x:
            lo = mid + 1
        else:
            hi = mid
    return lo


cdef inline Py_ssize_t _upper_bound(const double[::1] v, Py_ssize_t lo,
                                    Py_ssize_t hi, double x) noexcept nogil:
    cdef Py_ssize_t mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if v[mid] <= x:
            lo = mid + 1
        else:
            hi = mid
    return lo


def nb_log_density(const double[:, ::1] grouped,
                   const Py_ssize_t[::1] offsets,
                   const double[:, ::1] test,
                   const Py_ssize_t[::1] cols,
                   double sigma):
    cdef Py_ssize_t n_test = test.shape[0]
    cdef Py_ssize_t n_classes = offsets.shape[0] - 1
    cdef Py_ssize_t n_cols = cols.shape[0]
    cdef Py_ssize_t q, g, ci, c, j, lo, hi, m
    cdef double x, s, z, dens
    cdef double inv_sigma = 1.0 / sigma
    cdef double norm = sigma * sqrt(2.0 * M_PI)
    cdef double half_window = _WINDOW_SIGMAS * sigma
    cdef const double[::1] seg

    out = np.empty((n_test, n_classes, n_cols), dtype=np.float64)
    cdef double[:, :, ::1] res = out

    for q in range(n_test):
        for ci in range(n_cols):
            c = cols[ci]
            x = test[q, c]
            seg = grouped[c]
            for g in range(n_classes):
                m = offsets[g + 1] - offsets[g]
                lo = _lower_bound(seg, offsets[g], offsets[g + 1], x - half_window)
                hi = _upper_bound(seg, lo, offsets[g + 1], x + half_window)
                s = 0.0
                for j in range(lo, hi):
                    z = (x - seg[j]) * inv_sigma
                    s += exp(-0.5 * z * z)
                dens = s / (m * norm)
                if dens < _DENSITY_FLOOR:
                    dens = _DENSITY_FLOOR
                res[q, g, ci] = log(dens)
    return out

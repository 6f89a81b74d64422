"""Compare the compiled and pure-Python kernel backends.

Each backend runs in its own interpreter because the choice is made once, at
import time. Usage::

    python3 benchmarks/bench_kernels.py [--rows 700] [--repeat 5]

The inner mode (``--inner``) prints one JSON line of timings for whichever
backend the current process picked up.
"""

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def _best(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def inner(rows, repeat):
    from pqselect import kernels
    from pqselect.classify import KnnConfig, NbConfig, fit_all
    from pqselect.evalcore import Criterion, make_folds
    from pqselect.features import Dataset

    rng = np.random.default_rng(0)
    y = np.repeat(np.arange(1, 15), rows // 14)
    X = rng.normal(y[:, None] * 0.1, 1.0, (y.size, 99))
    half = y.size // 2
    train, test = slice(0, None, 2), slice(1, None, 2)
    cols = np.sort(rng.choice(99, 30, replace=False)).astype(np.intp)

    knn = fit_all(X[train], y[train], KnnConfig())
    nb = fit_all(X[train], y[train], NbConfig())
    Z = knn.scaler.transform(X[test])

    data = Dataset(X, y)
    masks = rng.random((20, 99)) < 0.3

    def criterion_sweep():
        crit = Criterion(data, KnnConfig(), make_folds(data, 0))
        for m in masks:
            crit.evaluate(m)

    out = {
        "backend": kernels.BACKEND,
        "rows": int(y.size),
        "test_rows": int(y.size - half),
        "knn_predict": _best(lambda: knn.predict_index(Z, cols), repeat),
        "nb_log_density": _best(lambda: nb.log_density(Z, cols), repeat),
        "criterion_20_masks": _best(criterion_sweep, max(1, repeat // 2)),
    }
    print(json.dumps(out))


def run_backend(pure, rows, repeat):
    env = dict(os.environ)
    env.pop("PQSELECT_PURE_PYTHON", None)
    if pure:
        env["PQSELECT_PURE_PYTHON"] = "1"
    res = subprocess.run([sys.executable, __file__, "--inner", "--rows", str(rows),
                          "--repeat", str(repeat)], env=env, capture_output=True,
                         text=True, check=True)
    return json.loads(res.stdout.strip().splitlines()[-1])


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rows", type=int, default=700)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--inner", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args(argv)
    if args.inner:
        inner(args.rows, args.repeat)
        return

    fast = run_backend(False, args.rows, args.repeat)
    slow = run_backend(True, args.rows, args.repeat)
    print(f"{fast['rows']} rows, {fast['test_rows']} queried, 30 of 99 columns")
    print(f"{'kernel':<22}{fast['backend']:>12}{slow['backend']:>12}{'speed-up':>10}")
    for key in ("knn_predict", "nb_log_density", "criterion_20_masks"):
        a, b = fast[key], slow[key]
        print(f"{key:<22}{a * 1e3:>10.2f}ms{b * 1e3:>10.2f}ms{b / a:>9.1f}x")


if __name__ == "__main__":
    main()

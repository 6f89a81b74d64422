"""Command-line entry point: ``pqselect <subcommand> ...``."""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, harness, synth, wavelet
from .classify import KnnConfig, NbConfig
from .evalcore import Criterion, make_folds
from .features import DEFAULT_LEVELS, featurize_arrays, load_csv, save_csv
from .kernels import BACKEND


def _classes(text: str):
    if text == "all":
        return None
    return [synth.parse_class_id(c) for c in text.split(",")]


def cmd_synth(args) -> None:
    cfg = synth.SynthesisConfig(rng_seed=args.seed)
    waves = synth.build_dataset(cfg, args.per_class, synth.parse_snr(args.snr), _classes(args.classes))
    synth.save_waveforms(args.out, waves)
    print(f"wrote {len(waves)} waveforms to {args.out}")


def cmd_featurize(args) -> None:
    labels, snr, samples = synth.load_waveforms(args.inp)
    snrs = set(np.asarray(snr, dtype=float).tolist())
    ds = featurize_arrays(labels, samples, snrs.pop() if len(snrs) == 1 else float("nan"),
                          levels=args.levels)
    save_csv(ds, args.out)
    if args.dump_coeffs:
        _dump_coeffs(Path(args.dump_coeffs), labels, samples, args.levels)
    print(f"wrote {ds.n_rows} x {ds.n_features} features to {args.out}")


def _dump_coeffs(root: Path, labels, samples, levels: int) -> None:
    root.mkdir(parents=True, exist_ok=True)
    for i, (lab, x) in enumerate(zip(labels, samples)):
        dec = wavelet.decompose(np.asarray(x, dtype=float), wavelet.SYM6, levels)
        names = [f"d{j}" for j in range(1, levels + 1)] + [f"a{levels}"]
        with open(root / f"instance_{i:05d}_v{lab}.csv", "w") as fh:
            for name, band in zip(names, dec.bands()):
                fh.write(name + "," + ",".join(repr(float(v)) for v in band) + "\n")


def _classifier(args):
    if args.classifier == "knn":
        return KnnConfig(args.k, args.metric)
    return NbConfig(args.kernel_width)


def cmd_search(args) -> None:
    data = load_csv(args.data)
    classifier = _classifier(args)
    plan = make_folds(data, args.fold_seed)
    crit = Criterion(data, classifier, plan)
    algorithm = harness.canonical_algorithm(args.algo)
    params = json.loads(args.params) if args.params else {}
    if algorithm == "SFFS":
        if args.target is None:
            raise ValueError("SFFS needs --target (the subset size to search for)")
        params["target"] = args.target
    cfg = harness.algorithm_config(algorithm, params, args.budget, args.seed)
    rec = harness.run_algorithm(algorithm, crit, cfg)
    digest = hashlib.sha256(Path(args.data).read_bytes()).hexdigest()
    echo = {"algorithm": algorithm, "seed": args.seed, "budget": args.budget,
            "classifier": classifier.to_dict(), "fold_seed": args.fold_seed,
            "params": params, "data_sha256": digest}
    rec.config_hash = hashlib.sha256(
        json.dumps(echo, sort_keys=True).encode()).hexdigest()[:16]
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    rec.save(out)
    print(f"{algorithm} seed {args.seed}: J={rec.best_j:.6f} xi={rec.xi} "
          f"({crit.queries} evaluations) -> {out}")


def _log(msg: str) -> None:
    print(msg, file=sys.stderr, flush=True)


def cmd_stage1(args) -> None:
    cfg = harness.ExperimentConfig.load(args.config)
    summary = harness.stage1(cfg, args.out, args.workers, log=_log)
    _print_metrics(summary)


def cmd_stage2(args) -> None:
    snrs = args.snr.split(",") if args.snr else None
    result = harness.stage2(args.inp, snrs, log=_log)
    for row in result["rows"]:
        gains = ", ".join(f"{a} {v - row['theta_full']:+.2f}" for a, v in row["theta"].items())
        print(f"SNR {row['snr_db']:>4}: full {row['theta_full']:.2f}%  {gains}")


def cmd_report(args) -> None:
    _print_metrics(harness.report(args.inp))


def _print_metrics(summary: dict) -> None:
    print(f"J(U) = {summary['j_full']:.4f}")
    for a, m in summary["metrics"].items():
        pi = "n/a" if m["pi"] is None else f"{m['pi']:.1f}%"
        print(f"{a:>8}: mean J {m['mean_j']:.4f}  xi {m['xi_avg']:.1f}  PI {pi}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pqselect",
                                description="Wrapper feature selection for PQ event classification")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__} (kernels: {BACKEND})")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="generate event waveforms")
    s.add_argument("--classes", default="all", help="'all' or comma list like v3,v5")
    s.add_argument("--per-class", type=int, default=250)
    s.add_argument("--snr", default="inf", help="dB, or 'inf' for clean")
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--out", required=True, help=".npz or .csv")
    s.set_defaults(func=cmd_synth)

    f = sub.add_parser("featurize", help="wavelet features from a waveform archive")
    f.add_argument("--in", dest="inp", required=True)
    f.add_argument("--out", required=True, help="dataset CSV")
    f.add_argument("--levels", type=int, default=DEFAULT_LEVELS)
    f.add_argument("--dump-coeffs", metavar="DIR", help="also write raw wavelet coefficients")
    f.set_defaults(func=cmd_featurize)

    r = sub.add_parser("search", help="one feature-selection run")
    r.add_argument("--algo", required=True,
                   help="2dupso, ga, aco, bpso, cbpso, chbpso or sffs")
    r.add_argument("--seed", type=int, required=True)
    r.add_argument("--data", required=True, help="dataset CSV")
    r.add_argument("--out", required=True, help="run record JSON")
    r.add_argument("--budget", type=int, default=6000)
    r.add_argument("--fold-seed", type=int, default=0)
    r.add_argument("--classifier", choices=("knn", "nb"), default="knn")
    r.add_argument("--k", type=int, default=3)
    r.add_argument("--metric", choices=("manhattan", "euclidean"), default="manhattan")
    r.add_argument("--kernel-width", type=float, default=0.004)
    r.add_argument("--target", type=int, help="subset size (SFFS only)")
    r.add_argument("--params", help="JSON object of algorithm parameter overrides")
    r.set_defaults(func=cmd_search)

    a = sub.add_parser("stage1", help="comparative evaluation on the clean dataset")
    a.add_argument("--config", required=True, help="YAML or JSON experiment file")
    a.add_argument("--out", required=True)
    a.add_argument("--workers", type=int, help=f"parallel runs (default ${harness.WORKERS_ENV} or 1)")
    a.set_defaults(func=cmd_stage1)

    b = sub.add_parser("stage2", help="robustness of the best subsets under noise")
    b.add_argument("--in", dest="inp", required=True, help="stage1 output directory")
    b.add_argument("--snr", help="comma list overriding the configured SNR sweep")
    b.set_defaults(func=cmd_stage2)

    c = sub.add_parser("report", help="rebuild tables from persisted run records")
    c.add_argument("--in", dest="inp", required=True)
    c.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (OSError, ValueError, KeyError, RuntimeError) as exc:
        print(f"pqselect {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

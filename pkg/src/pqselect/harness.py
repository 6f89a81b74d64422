"""Two-stage experiment orchestration.

Stage I synthesises the pure dataset, fixes one fold plan, runs every search
algorithm for ``runs`` seeds and compares them (metrics, Friedman + Hommel on
``J`` and cardinality, SFFS at the best 2D-UPSO cardinality). Stage II re-scores
each algorithm's best subset on noisy copies of the same events.

Every artifact lands in one output directory and carries the configuration
hash. Run records are written as soon as each run finishes, and a restarted
stage skips runs whose record already exists with a matching hash.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
import yaml

from . import npstats
from .baselines import AcoConfig, BpsoConfig, GaConfig, SffsConfig, run_aco, run_bpso, run_ga, run_sffs
from .classify import classifier_from_dict
from .evalcore import Criterion, make_folds
from .features import Dataset, featurize_dataset, load_csv, save_csv
from .metrics import RunRecord, aggregate, best_run, format_snr, robustness_eval
from .synth import SynthesisConfig, build_dataset, parse_snr
from .twodim import UpsoConfig, run_2d_upso

ALGORITHMS = ("GA", "ACO", "BPSO", "CBPSO", "chBPSO", "2D-UPSO")
DEFAULT_SNRS = (math.inf, 50.0, 45.0, 40.0, 35.0, 30.0, 25.0, 20.0)
WORKERS_ENV = "PQSELECT_WORKERS"

_ALIASES = {a.lower().replace("-", ""): a for a in ALGORITHMS + ("SFFS",)}


def canonical_algorithm(name: str) -> str:
    key = name.lower().replace("-", "").replace("_", "")
    if key not in _ALIASES:
        raise ValueError(f"unknown algorithm {name!r}; choose from "
                         + ", ".join(ALGORITHMS + ("SFFS",)))
    return _ALIASES[key]


# -- configuration ---------------------------------------------------------------

@dataclass
class ExperimentConfig:
    per_class: int = 250
    data_seed: int = 42
    fold_seed: int | None = None
    fundamental_frequency: float = 50.0
    sampling_frequency: float = 25000.0
    duration_cycles: int = 30
    classifier: dict = field(default_factory=lambda: {"kind": "knn", "k": 3, "metric": "manhattan"})
    algorithms: list = field(default_factory=lambda: list(ALGORITHMS))
    params: dict = field(default_factory=dict)   # algorithm -> parameter overrides
    runs: int = 40
    budget: int = 6000
    seed_base: int = 0
    sffs: bool = True
    snr_db: list = field(default_factory=lambda: list(DEFAULT_SNRS))

    def __post_init__(self):
        self.algorithms = [canonical_algorithm(a) for a in self.algorithms]
        self.params = {canonical_algorithm(k): dict(v) for k, v in self.params.items()}
        self.snr_db = [parse_snr(s) for s in self.snr_db]
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        if self.per_class < 10:
            raise ValueError("need at least 10 events per class for 10-fold CV")
        if not self.algorithms:
            raise ValueError("algorithm roster is empty")
        if "SFFS" in self.algorithms:
            raise ValueError("SFFS is not a roster algorithm; it runs after 2D-UPSO when sffs is on")
        classifier_from_dict(self.classifier)
        for a in self.algorithms:
            algorithm_config(a, self.params.get(a, {}), self.budget, 0)  # validates budget

    @property
    def folds_seed(self) -> int:
        return self.data_seed if self.fold_seed is None else self.fold_seed

    def synthesis(self) -> SynthesisConfig:
        return SynthesisConfig(self.fundamental_frequency, self.sampling_frequency,
                               self.duration_cycles, self.data_seed)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["snr_db"] = [format_snr(s) for s in self.snr_db]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown configuration keys: {', '.join(sorted(unknown))}")
        return cls(**d)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        text = Path(path).read_text()
        data = yaml.safe_load(text) or {}
        if not isinstance(data, dict):
            raise ValueError(f"{path}: expected a mapping at top level")
        return cls.from_dict(_flatten_sections(data))

    def hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _flatten_sections(d: dict) -> dict:
    """Accept ``dataset:`` / ``search:`` sections as well as flat keys."""
    out = {}
    for key, value in d.items():
        if key in ("dataset", "search", "stage2") and isinstance(value, dict):
            out.update(value)
        else:
            out[key] = value
    return out


def algorithm_config(name: str, params: dict, budget: int, seed: int):
    name = canonical_algorithm(name)
    p = dict(params, seed=seed)
    if name == "SFFS":
        return SffsConfig(**p)
    p["budget"] = budget
    if name == "2D-UPSO":
        return UpsoConfig(**p)
    if name == "GA":
        return GaConfig(**p)
    if name == "ACO":
        return AcoConfig(**p)
    return BpsoConfig(**p)


def run_algorithm(name: str, criterion: Criterion, cfg) -> RunRecord:
    name = canonical_algorithm(name)
    if name == "2D-UPSO":
        return run_2d_upso(criterion, cfg)
    if name == "GA":
        return run_ga(criterion, cfg)
    if name == "ACO":
        return run_aco(criterion, cfg)
    if name == "SFFS":
        return run_sffs(criterion, cfg)
    variant = {"BPSO": "plain", "CBPSO": "catfish", "chBPSO": "chaotic"}[name]
    return run_bpso(criterion, cfg, variant)


# -- persistence -------------------------------------------------------------------

def _write_json(path: Path, obj) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(json.dumps(obj, sort_keys=True, indent=1) + "\n")
    os.replace(tmp, path)


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def run_path(out: Path, algorithm: str, seed: int) -> Path:
    return out / "runs" / algorithm / f"seed_{seed}.json"


def load_runs(out: Path, expected_hash: str) -> dict:
    """All persisted run records, grouped by algorithm and sorted by seed."""
    runs = {}
    root = out / "runs"
    if not root.is_dir():
        raise FileNotFoundError(f"{root}: no run records found")
    for path in sorted(root.glob("*/seed_*.json")):
        rec = RunRecord.load(path)
        if rec.config_hash != expected_hash:
            raise ValueError(f"{path}: config hash {rec.config_hash} does not match "
                             f"{expected_hash}; refusing to mix experiments")
        runs.setdefault(rec.algorithm, []).append(rec)
    for recs in runs.values():
        recs.sort(key=lambda r: r.seed)
    return runs


def pure_dataset(cfg: ExperimentConfig, out: Path | None = None) -> Dataset:
    return noisy_dataset(cfg, math.inf, out)


def noisy_dataset(cfg: ExperimentConfig, snr: float, out: Path | None = None) -> Dataset:
    """Featurised dataset at ``snr``; cached as CSV under ``out`` when given."""
    path = None if out is None else out / f"dataset_snr_{format_snr(snr)}.csv"
    if path is not None and path.exists():
        return load_csv(path)
    waves = build_dataset(cfg.synthesis(), cfg.per_class, snr)
    ds = featurize_dataset(waves, provenance={"seed": cfg.data_seed, "snr_db": format_snr(snr)})
    if path is not None:
        save_csv(ds, path)
    return ds


# -- stage I -----------------------------------------------------------------------

def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValueError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None


_WORKER_CRITERION = None


def _init_worker(data, classifier, plan):
    global _WORKER_CRITERION
    _WORKER_CRITERION = Criterion(data, classifier, plan)


def _job(algorithm, params, budget, seed):
    return _execute(_WORKER_CRITERION, algorithm, params, budget, seed)


def _execute(criterion, algorithm, params, budget, seed) -> RunRecord:
    cfg = algorithm_config(algorithm, params, budget, seed)
    crit = criterion.spawn()
    try:
        rec = run_algorithm(algorithm, crit, cfg)
    except Exception as exc:
        raise RuntimeError(f"{algorithm} run with seed {seed} failed: {exc}") from exc
    if algorithm != "SFFS" and crit.queries != budget:
        raise RuntimeError(f"{algorithm} seed {seed}: {crit.queries} criterion queries "
                           f"for a budget of {budget}")
    return rec


def stage1(cfg: ExperimentConfig, out, workers: int | None = None, log=None) -> dict:
    out = Path(out)
    (out / "runs").mkdir(parents=True, exist_ok=True)
    h = cfg.hash()
    _check_or_write_config(out, cfg, h)
    log = log or (lambda msg: None)

    data = pure_dataset(cfg, out)
    classifier = classifier_from_dict(cfg.classifier)
    plan = make_folds(data, cfg.folds_seed)
    base = Criterion(data, classifier, plan)
    j_full = base.evaluate(np.ones(data.n_features, dtype=bool)).j
    _write_json(out / "baseline.json", {"config_hash": h, "j_full": j_full,
                                        "n_features": data.n_features})

    jobs = []
    for a in cfg.algorithms:
        for r in range(cfg.runs):
            seed = cfg.seed_base + r
            if not _have_run(out, a, seed, h):
                jobs.append((a, cfg.params.get(a, {}), cfg.budget, seed))
    workers = workers or worker_count()
    for rec in _run_jobs(jobs, workers, base, (data, classifier, plan)):
        rec.config_hash = h
        path = run_path(out, rec.algorithm, rec.seed)
        path.parent.mkdir(parents=True, exist_ok=True)
        rec.save(path)
        log(f"{rec.algorithm} seed {rec.seed}: J={rec.best_j:.6f} xi={rec.xi}")

    if cfg.sffs and "2D-UPSO" in cfg.algorithms:
        runs = load_runs(out, h)
        target = best_run(runs["2D-UPSO"]).xi
        seed = 0
        if not _have_run(out, "SFFS", seed, h, target):
            params = dict(cfg.params.get("SFFS", {}), target=target)
            rec = _execute(base, "SFFS", params, None, seed)
            rec.config_hash = h
            path = run_path(out, "SFFS", seed)
            path.parent.mkdir(parents=True, exist_ok=True)
            rec.save(path)
            log(f"SFFS at xi={target}: J={rec.best_j:.6f}")

    return report(out)


def _run_jobs(jobs, workers, criterion, init_args):
    if workers <= 1 or len(jobs) <= 1:
        for job in jobs:
            yield _execute(criterion, *job)
        return
    with ProcessPoolExecutor(workers, initializer=_init_worker, initargs=init_args) as ex:
        futures = [ex.submit(_job, *job) for job in jobs]
        for fut in futures:
            yield fut.result()


def _have_run(out: Path, algorithm: str, seed: int, h: str, target=None) -> bool:
    path = run_path(out, algorithm, seed)
    if not path.exists():
        return False
    rec = RunRecord.load(path)
    if rec.config_hash != h:
        raise ValueError(f"{path}: belongs to a different configuration ({rec.config_hash})")
    return target is None or rec.config.get("target") == target


def _check_or_write_config(out: Path, cfg: ExperimentConfig, h: str) -> None:
    path = out / "config.json"
    if path.exists():
        old = json.loads(path.read_text())
        if old.get("config_hash") != h:
            raise ValueError(f"{out} holds results for config {old.get('config_hash')}, "
                             f"not {h}; use a fresh output directory")
        return
    _write_json(path, {"config_hash": h, "config": cfg.to_dict()})


def load_experiment(out) -> tuple:
    out = Path(out)
    path = out / "config.json"
    if not path.exists():
        raise FileNotFoundError(f"{path}: not an experiment directory")
    meta = json.loads(path.read_text())
    cfg = ExperimentConfig.from_dict(meta["config"])
    if cfg.hash() != meta["config_hash"]:
        raise ValueError(f"{path}: stored hash does not match its configuration")
    return cfg, meta["config_hash"]


def report(out) -> dict:
    """Rebuild the Stage I summary and tables from persisted run records."""
    out = Path(out)
    cfg, h = load_experiment(out)
    base = json.loads((out / "baseline.json").read_text())
    if base["config_hash"] != h:
        raise ValueError("baseline.json belongs to a different configuration")
    j_full, n = base["j_full"], base["n_features"]
    runs = load_runs(out, h)
    roster = [a for a in cfg.algorithms if a in runs]
    missing = [a for a in cfg.algorithms if len(runs.get(a, [])) < cfg.runs]
    if missing:
        raise ValueError(f"incomplete runs for {', '.join(missing)}")

    metrics = {a: aggregate(runs[a][:cfg.runs], j_full, n) for a in roster}
    summary = {
        "config_hash": h,
        "j_full": j_full,
        "n_features": n,
        "metrics": {a: m.to_dict() for a, m in metrics.items()},
        "best": {a: _best_summary(best_run(runs[a][:cfg.runs])) for a in roster},
    }
    _write_csv(out / "table_metrics.csv",
               ["algorithm", "mean_j", "sd_j", "pi_pct", "xi_avg", "sd_xi",
                "xi_reduction_pct", "score"],
               [list(metrics[a].display().values()) for a in roster])

    if len(roster) >= 2 and cfg.runs >= 2:
        control = roster.index("2D-UPSO") if "2D-UPSO" in roster else 0
        stats = {}
        for key, attr in (("j", "best_j"), ("xi", "xi")):
            table = np.array([[getattr(runs[a][r], attr) for a in roster]
                              for r in range(cfg.runs)], dtype=float)
            fr = npstats.friedman(table)
            post = npstats.hommel_posthoc(fr.average_ranks, fr.n, control, roster)
            stats[key] = {
                "average_ranks": dict(zip(roster, fr.average_ranks.tolist())),
                "statistic": fr.statistic,
                "p_value": fr.p_value,
                "control": roster[control],
                "posthoc": [asdict(c) for c in post],
            }
        summary["friedman"] = stats
        _write_csv(out / "table_friedman.csv", ["criterion"] + roster + ["statistic", "p_value"],
                   [[k] + [f"{s['average_ranks'][a]:.2f}" for a in roster]
                    + [f"{s['statistic']:.4f}", f"{s['p_value']:.3g}"] for k, s in stats.items()])
        _write_csv(out / "table_hommel.csv",
                   ["criterion", "algorithm", "z", "p", "apv", "rejected"],
                   [[k, c["name"], f"{c['z']:.4f}", f"{c['p']:.3g}", f"{c['apv']:.3g}",
                     "yes" if c["rejected"] else "no"]
                    for k, s in stats.items() for c in s["posthoc"]])

    if "SFFS" in runs and "2D-UPSO" in runs:
        sffs = runs["SFFS"][0]
        upso = best_run(runs["2D-UPSO"][:cfg.runs])
        summary["sffs"] = {"xi_best": upso.xi, "j_sffs": sffs.best_j, "j_2d_upso": upso.best_j}
        _write_csv(out / "table_sffs.csv", ["xi_best", "j_sffs", "j_2d_upso"],
                   [[upso.xi, f"{sffs.best_j:.4f}", f"{upso.best_j:.4f}"]])

    _write_json(out / "stage1.json", summary)
    if (out / "stage2_raw.json").exists():
        summary["stage2"] = stage2_report(out)
    return summary


def _best_summary(rec: RunRecord) -> dict:
    return {"seed": rec.seed, "best_j": rec.best_j, "xi": rec.xi,
            "best_mask": "".join("1" if b else "0" for b in rec.best_mask)}


# -- stage II ----------------------------------------------------------------------

def stage2(out, snrs=None, log=None) -> dict:
    out = Path(out)
    cfg, h = load_experiment(out)
    if not (out / "stage1.json").exists():
        raise FileNotFoundError(f"{out}/stage1.json missing; run stage1 first")
    snrs = [parse_snr(s) for s in (snrs if snrs is not None else cfg.snr_db)]
    log = log or (lambda msg: None)
    runs = load_runs(out, h)
    masks = {a: best_run(runs[a][:cfg.runs]).best_mask for a in cfg.algorithms if a in runs}
    classifier = classifier_from_dict(cfg.classifier)
    plan = make_folds(pure_dataset(cfg, out), cfg.folds_seed)

    rows = []
    for snr in snrs:
        ds = noisy_dataset(cfg, snr, out)
        row = robustness_eval(masks, {snr: ds}, classifier, plan)[0]
        rows.append({"snr_db": format_snr(snr), "theta_full": row.theta_full,
                     "theta": row.theta})
        log(f"SNR {format_snr(snr)}: full-set accuracy {row.theta_full:.2f}%")
    _write_json(out / "stage2_raw.json", {"config_hash": h, "rows": rows})
    return stage2_report(out)


def stage2_report(out) -> dict:
    out = Path(out)
    cfg, h = load_experiment(out)
    raw = json.loads((out / "stage2_raw.json").read_text())
    if raw["config_hash"] != h:
        raise ValueError("stage2_raw.json belongs to a different configuration")
    rows = raw["rows"]
    algos = [a for a in cfg.algorithms if rows and a in rows[0]["theta"]]
    _write_csv(out / "table_robustness.csv",
               ["snr_db", "theta_full"] + [f"theta_{a}" for a in algos] + [f"gain_{a}" for a in algos],
               [[r["snr_db"], f"{r['theta_full']:.2f}"]
                + [f"{r['theta'][a]:.2f}" for a in algos]
                + [f"{r['theta'][a] - r['theta_full']:.2f}" for a in algos] for r in rows])
    result = {"config_hash": h, "rows": rows}
    if len(rows) >= 2 and len(algos) >= 2:
        perf = np.array([[r["theta"][a] for a in algos] for r in rows])
        M = npstats.contrast_estimation(perf)
        result["contrast"] = {"algorithms": algos, "matrix": M.tolist()}
        _write_csv(out / "table_contrast.csv", [""] + algos,
                   [[a] + [f"{round(v, 4) + 0.0:.4f}" for v in M[i]] for i, a in enumerate(algos)])
    _write_json(out / "stage2.json", result)
    return result

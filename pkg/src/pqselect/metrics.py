"""Run records and cross-run performance metrics.

``aggregate`` computes the search-quality summary for one algorithm:
mean/SD of the criterion, mean/SD cardinality, relative improvement over the
full feature set (PI %), relative subset reduction (Xi %) and the overall
score ``sum_k (xi_k / n) * J_k``. ``robustness_eval`` re-scores fixed subsets
on noisy datasets and reports accuracy gains over the full set.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np


def mask_to_str(mask) -> str:
    return "".join("1" if b else "0" for b in np.asarray(mask, dtype=bool))


def str_to_mask(s: str) -> np.ndarray:
    if set(s) - {"0", "1"}:
        raise ValueError("mask string must contain only 0 and 1")
    return np.frombuffer(s.encode(), dtype=np.uint8) == ord("1")


@dataclass
class RunRecord:
    algorithm: str
    seed: int
    best_mask: np.ndarray
    best_j: float
    fes_used: int
    j_trace: list = field(default_factory=list)   # best-so-far J after each evaluation
    xi_trace: list = field(default_factory=list)  # cardinality of the best-so-far mask
    config: dict = field(default_factory=dict)
    config_hash: str = ""

    @property
    def xi(self) -> int:
        return int(np.count_nonzero(self.best_mask))

    def to_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "seed": int(self.seed),
            "best_mask": mask_to_str(self.best_mask),
            "best_j": float(self.best_j),
            "xi": self.xi,
            "fes_used": int(self.fes_used),
            "j_trace": [float(v) for v in self.j_trace],
            "xi_trace": [int(v) for v in self.xi_trace],
            "config": self.config,
            "config_hash": self.config_hash,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "RunRecord":
        return cls(
            algorithm=d["algorithm"],
            seed=int(d["seed"]),
            best_mask=str_to_mask(d["best_mask"]),
            best_j=float(d["best_j"]),
            fes_used=int(d["fes_used"]),
            j_trace=list(d.get("j_trace", [])),
            xi_trace=list(d.get("xi_trace", [])),
            config=d.get("config", {}),
            config_hash=d.get("config_hash", ""),
        )

    @classmethod
    def load(cls, path) -> "RunRecord":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_json())


@dataclass
class MetricsReport:
    algorithm: str
    runs: int
    mean_j: float
    sd_j: float
    xi_avg: float
    sd_xi: float
    pi: float | None   # None when J(U) == 0
    xi_reduction: float
    score: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)

    def display(self) -> dict:
        """Rounded the way the result tables print them."""
        return {
            "algorithm": self.algorithm,
            "mean_j": f"{self.mean_j:.4g}",
            "sd_j": f"{self.sd_j:.2g}",
            "pi_pct": "" if self.pi is None else f"{self.pi:.1f}",
            "xi_avg": f"{self.xi_avg:.1f}",
            "sd_xi": f"{self.sd_xi:.1f}",
            "xi_reduction_pct": f"{self.xi_reduction:.1f}",
            "score": f"{self.score:.4f}",
        }


def _sd(v: np.ndarray) -> float:
    return float(np.std(v, ddof=1)) if v.size > 1 else 0.0


def aggregate(runs, j_full: float, n: int, algorithm: str | None = None) -> MetricsReport:
    runs = list(runs)
    if not runs:
        raise ValueError("no runs to aggregate")
    j = np.array([r.best_j for r in runs], dtype=float)
    xi = np.array([r.xi for r in runs], dtype=float)
    mean_j = float(j.mean())
    xi_avg = float(xi.mean())
    pi = None if j_full == 0 else (j_full - mean_j) / j_full * 100.0
    return MetricsReport(
        algorithm=algorithm or runs[0].algorithm,
        runs=len(runs),
        mean_j=mean_j,
        sd_j=_sd(j),
        xi_avg=xi_avg,
        sd_xi=_sd(xi),
        pi=pi,
        xi_reduction=(n - xi_avg) / n * 100.0,
        score=float(np.sum(xi / n * j)),
    )


def best_run(runs):
    """Minimum-J run; ties go to the smaller subset, then the earlier seed."""
    return min(runs, key=lambda r: (r.best_j, r.xi, r.seed))


@dataclass
class RobustnessRow:
    snr_db: float
    theta_full: float            # accuracy of the full set, percent
    theta: dict                  # algorithm -> accuracy of its subset, percent

    def gain(self) -> dict:
        return {a: v - self.theta_full for a, v in self.theta.items()}


def robustness_eval(masks: dict, datasets: dict, classifier, plan) -> list:
    """Accuracy of each algorithm's subset vs. the full set at every noise level.

    ``masks`` maps algorithm -> mask; ``datasets`` maps SNR (dB) -> Dataset with
    rows aligned to ``plan``. Accuracies are in percent.
    """
    from .evalcore import Criterion

    rows = []
    for snr in sorted(datasets, key=lambda s: -s):
        crit = Criterion(datasets[snr], classifier, plan)
        n = datasets[snr].n_features
        full = crit.evaluate(np.ones(n, dtype=bool)).theta * 100.0
        theta = {a: crit.evaluate(m).theta * 100.0 for a, m in masks.items()}
        rows.append(RobustnessRow(float(snr), full, theta))
    return rows


def format_snr(snr: float) -> str:
    return "inf" if math.isinf(snr) else f"{snr:g}"

"""Comparison searches: GA, ACO, binary PSO (plain, catfish, chaotic) and SFFS.

All of them query the criterion through a :class:`SearchTracker`, so the
function-evaluation budget and best-so-far trace are accounted identically.
"""

from __future__ import annotations

import math
import sys
from dataclasses import asdict, dataclass

import numpy as np

from .evalcore import BudgetExhausted, Criterion, SearchTracker
from .metrics import RunRecord
from .twodim import particle_rngs


# -- genetic algorithm ---------------------------------------------------------

@dataclass(frozen=True)
class GaConfig:
    pop: int = 30
    pc: float = 0.8
    pm: float = 0.2
    budget: int = 6000
    seed: int = 0

    def __post_init__(self):
        if not (0 <= self.pc <= 1 and 0 <= self.pm <= 1):
            raise ValueError("crossover and mutation probabilities must lie in [0, 1]")
        if self.pop < 2:
            raise ValueError("population must be >= 2")
        if self.budget < self.pop:
            raise ValueError("budget must cover the initial population")

    def to_dict(self):
        return asdict(self)


ROULETTE_EPS = 1e-12


def roulette_pick(weights: np.ndarray, rng: np.random.Generator) -> int:
    cum = np.cumsum(weights)
    return min(int(np.searchsorted(cum, rng.uniform(0.0, cum[-1]), side="right")),
               weights.size - 1)


def single_point_crossover(a, b, point: int):
    return (np.concatenate([a[:point], b[point:]]),
            np.concatenate([b[:point], a[point:]]))


def run_ga(criterion: Criterion, cfg: GaConfig = GaConfig()) -> RunRecord:
    """Generational GA with roulette selection on ``1 - J`` and one elite."""
    n = criterion.n_features
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))
    tracker = SearchTracker(criterion, cfg.budget)
    pop = rng.random((cfg.pop, n)) < 0.5
    fit = np.array([tracker.evaluate(p) for p in pop])

    while tracker.remaining > 0:
        elite = int(np.argmin(fit))
        weights = (1.0 - fit) + ROULETTE_EPS
        children = []
        while len(children) < cfg.pop - 1:
            a = pop[roulette_pick(weights, rng)]
            b = pop[roulette_pick(weights, rng)]
            if n > 1 and rng.random() < cfg.pc:
                a, b = single_point_crossover(a, b, int(rng.integers(1, n)))
            for child in (a, b):
                flip = rng.random(n) < cfg.pm
                children.append(child ^ flip)
        children = children[:cfg.pop - 1]

        new_pop, new_fit = [pop[elite]], [fit[elite]]
        for child in children:
            if tracker.remaining == 0:
                break
            new_pop.append(child)
            new_fit.append(tracker.evaluate(child))
        pop, fit = np.array(new_pop), np.array(new_fit)

    return tracker.record("GA", cfg.seed, cfg.to_dict())


# -- ant colony ----------------------------------------------------------------

@dataclass(frozen=True)
class AcoConfig:
    ants: int = 50
    deposit: float = 5.0
    evaporation: float = 0.2
    tau_min: float = 0.3
    tau_max: float = 1.5
    budget: int = 6000
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.tau_min < self.tau_max:
            raise ValueError("need 0 < tau_min < tau_max")
        if not 0 <= self.evaporation <= 1:
            raise ValueError("evaporation must lie in [0, 1]")
        if self.budget < self.ants:
            raise ValueError("budget must cover one colony")

    def to_dict(self):
        return asdict(self)


class Pheromones:
    """Per-feature pheromone on the *deselect* (row 0) and *select* (row 1) edges."""

    def __init__(self, n: int, cfg: AcoConfig):
        self.cfg = cfg
        self.tau = np.full((2, n), cfg.tau_min + (cfg.tau_max - cfg.tau_min) / 2)

    def select_probability(self) -> np.ndarray:
        return self.tau[1] / (self.tau[0] + self.tau[1])

    def construct(self, rng: np.random.Generator) -> np.ndarray:
        return rng.random(self.tau.shape[1]) < self.select_probability()

    def update(self, best_path: np.ndarray, best_j: float) -> None:
        c = self.cfg
        self.tau *= 1.0 - c.evaporation
        amount = c.deposit * (1.0 - best_j)
        self.tau[1, best_path] += amount
        self.tau[0, ~best_path] += amount
        np.clip(self.tau, c.tau_min, c.tau_max, out=self.tau)


def run_aco(criterion: Criterion, cfg: AcoConfig = AcoConfig()) -> RunRecord:
    n = criterion.n_features
    rngs = particle_rngs(cfg.seed, cfg.ants)
    tracker = SearchTracker(criterion, cfg.budget)
    ph = Pheromones(n, cfg)
    while tracker.remaining > 0:
        paths = [ph.construct(g) for g in rngs]
        best_path, best_j = None, math.inf
        for p in paths[:tracker.remaining]:
            j = tracker.evaluate(p)
            if j < best_j:
                best_path, best_j = p, j
        ph.update(best_path, best_j)
    return tracker.record("ACO", cfg.seed, cfg.to_dict())


# -- binary PSO family ------------------------------------------------------------

VARIANTS = ("plain", "catfish", "chaotic")
_LOGISTIC_FIXED = (0.0, 0.25, 0.5, 0.75, 1.0)


@dataclass(frozen=True)
class BpsoConfig:
    ps: int = 30
    omega: float = 1.0
    c1: float = 2.0
    c2: float = 2.0
    v_min: float = -6.0
    v_max: float = 6.0
    catfish: int = 0      # 0 -> ps // 10
    catfish_gap: int = 3
    budget: int = 6000
    seed: int = 0

    def __post_init__(self):
        if not self.v_min < self.v_max:
            raise ValueError("need v_min < v_max")
        if self.ps < 2:
            raise ValueError("swarm size must be >= 2")
        if self.budget < self.ps:
            raise ValueError("budget must cover one swarm evaluation")

    @property
    def n_catfish(self) -> int:
        return self.catfish if self.catfish > 0 else max(1, self.ps // 10)

    def to_dict(self):
        return asdict(self)


def sigmoid(v):
    return 1.0 / (1.0 + np.exp(-v))


def logistic_start(rng: np.random.Generator) -> float:
    while True:
        w = float(rng.random())
        if all(abs(w - f) > 1e-9 for f in _LOGISTIC_FIXED):
            return w


def logistic_next(w: float) -> float:
    return 4.0 * w * (1.0 - w)


def bpso_velocity(v, x, pbest, gbest, omega, cfg: BpsoConfig, rng):
    n = x.size
    r1, r2 = rng.random(n), rng.random(n)
    xf = x.astype(float)
    v = omega * v + cfg.c1 * r1 * (pbest - xf) + cfg.c2 * r2 * (gbest - xf)
    return np.clip(v, cfg.v_min, cfg.v_max)


def run_bpso(criterion: Criterion, cfg: BpsoConfig = BpsoConfig(),
             variant: str = "plain") -> RunRecord:
    if variant not in VARIANTS:
        raise ValueError(f"unknown BPSO variant {variant!r}")
    n = criterion.n_features
    seq = np.random.SeedSequence(cfg.seed)
    swarm_seq, extra_seq = seq.spawn(2)
    rngs = [np.random.default_rng(s) for s in swarm_seq.spawn(cfg.ps)]
    extra = np.random.default_rng(extra_seq)
    tracker = SearchTracker(criterion, cfg.budget)

    x = np.array([g.random(n) < 0.5 for g in rngs])
    v = np.array([g.uniform(cfg.v_min, cfg.v_max, n) for g in rngs])
    fit = np.array([tracker.evaluate(p) for p in x])
    pbest, pbest_val = x.copy(), fit.copy()
    g = int(np.argmin(pbest_val))
    omega = logistic_start(extra) if variant == "chaotic" else cfg.omega
    stall = 0

    while tracker.remaining > 0:
        gbest = pbest[g].astype(float)
        for i, rng in enumerate(rngs):
            v[i] = bpso_velocity(v[i], x[i], pbest[i].astype(float), gbest, omega, cfg, rng)
            x[i] = rng.random(n) < sigmoid(v[i])
        g_before = pbest_val[g]
        for i in range(min(cfg.ps, tracker.remaining)):
            fit[i] = tracker.evaluate(x[i])
            if fit[i] < pbest_val[i]:
                pbest_val[i], pbest[i] = fit[i], x[i]
        g = int(np.argmin(pbest_val))
        stall = stall + 1 if pbest_val[g] >= g_before else 0

        if variant == "chaotic":
            omega = logistic_next(omega)
        elif variant == "catfish" and stall >= cfg.catfish_gap:
            _release_catfish(x, v, fit, pbest, pbest_val, cfg, extra, tracker)
            g = int(np.argmin(pbest_val))
            stall = 0

    name = {"plain": "BPSO", "catfish": "CBPSO", "chaotic": "chBPSO"}[variant]
    return tracker.record(name, cfg.seed, dict(cfg.to_dict(), variant=variant))


def _release_catfish(x, v, fit, pbest, pbest_val, cfg, rng, tracker) -> None:
    """Replace the worst particles with extreme-position newcomers."""
    c = min(cfg.n_catfish, x.shape[0])
    worst = np.argsort(-fit, kind="stable")[:c]
    n_ones = math.ceil(c / 2)
    for k, i in enumerate(worst):
        if tracker.remaining == 0:
            return
        x[i] = k < n_ones
        v[i] = rng.uniform(cfg.v_min, cfg.v_max, x.shape[1])
        fit[i] = tracker.evaluate(x[i])
        pbest[i], pbest_val[i] = x[i], fit[i]


# -- sequential forward floating search -------------------------------------------

@dataclass(frozen=True)
class SffsConfig:
    target: int
    budget: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.target < 1:
            raise ValueError("target cardinality must be >= 1")

    def to_dict(self):
        return asdict(self)


def _best_move(tracker, base: np.ndarray, candidates, add: bool):
    best_j, best_f = math.inf, None
    for f in candidates:
        m = base.copy()
        m[f] = add
        j = tracker.evaluate(m)
        if j < best_j:
            best_j, best_f = j, f
    return best_f, best_j


def run_sffs(criterion: Criterion, cfg: SffsConfig) -> RunRecord:
    """Floating forward search up to ``cfg.target`` features.

    After each inclusion, features are dropped one at a time for as long as
    the drop beats the best subset recorded at the smaller size. Ties go to
    the lower feature index. Returns the best subset of exactly the target
    size, or of the largest size reached if a budget cuts the search short.
    """
    n = criterion.n_features
    if cfg.target > n:
        raise ValueError(f"target cardinality {cfg.target} exceeds {n} features")
    tracker = SearchTracker(criterion, cfg.budget or sys.maxsize)
    best = {}  # size -> (J, mask)
    cur = np.zeros(n, dtype=bool)
    try:
        _float_search(tracker, cur, best, cfg.target)
    except BudgetExhausted:
        if not best:
            raise
    j, mask = best[min(cfg.target, max(best))]
    return RunRecord("SFFS", cfg.seed, mask, j, tracker.used,
                     list(tracker.j_trace), list(tracker.xi_trace), cfg.to_dict())


def _float_search(tracker, cur, best, target):
    k = 0
    while True:
        f, j = _best_move(tracker, cur, np.flatnonzero(~cur), add=True)
        cur[f] = True
        k += 1
        if k not in best or j < best[k][0]:
            best[k] = (j, cur.copy())
        while k > 1:
            f, j = _best_move(tracker, cur, np.flatnonzero(cur), add=False)
            if j < best[k - 1][0]:
                cur[f] = False
                k -= 1
                best[k] = (j, cur.copy())
            else:
                break
        if k >= target:
            return

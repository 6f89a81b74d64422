"""Unified particle swarm with two-dimensional learning (2D-UPSO).

A particle's velocity is a 2 x n matrix. Row 0 holds the selection likelihood
of every subset *size* (column j is size j + 1), row 1 the likelihood of every
individual feature. A new position is built by drawing a size from row 0 with
a roulette wheel and then taking that many features with the highest row-1
likelihoods.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .evalcore import Criterion, SearchTracker
from .metrics import RunRecord

SELECTION_FLOOR = 1e-6


@dataclass(frozen=True)
class UpsoConfig:
    ps: int = 30
    omega: float = 1.0
    c1: float = 2.0
    c2: float = 2.0
    u: float = 0.9
    rg: int = 30
    radius: int = 1
    budget: int = 6000
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.u <= 1.0:
            raise ValueError("unification factor u must lie in [0, 1]")
        if self.ps < 2:
            raise ValueError("swarm size must be >= 2")
        if self.rg < 1:
            raise ValueError("refresh gap must be >= 1")
        if self.radius < 1:
            raise ValueError("neighbourhood radius must be >= 1")
        if self.budget < self.ps:
            raise ValueError("budget must cover at least one swarm evaluation")

    def to_dict(self) -> dict:
        return asdict(self)


def learning_set(beta, alpha) -> np.ndarray:
    """Learning set of exemplar ``alpha`` for a particle at ``beta``.

    Row 0 marks the exemplar's cardinality (bit ``xi - 1``; nothing when empty),
    row 1 the features the exemplar holds and the particle lacks.
    """
    beta = np.asarray(beta, dtype=bool)
    alpha = np.asarray(alpha, dtype=bool)
    if beta.shape != alpha.shape:
        raise ValueError("position and exemplar lengths differ")
    L = np.zeros((2, beta.size), dtype=np.int8)
    xi = int(alpha.sum())
    if xi:
        L[0, xi - 1] = 1
    L[1] = alpha & ~beta
    return L


def self_learning_set(beta) -> np.ndarray:
    beta = np.asarray(beta, dtype=bool)
    L = np.zeros((2, beta.size), dtype=np.int8)
    xi = int(beta.sum())
    if xi:
        L[0, xi - 1] = 1
    L[1] = beta
    return L


def derive_learning_sets(beta, alpha):
    """``(L_alpha, L_i)``: the exemplar's learning set and the particle's own."""
    return learning_set(beta, alpha), self_learning_set(beta)


def fitness_feedback(f_now: float, f_prev, f_max: float) -> float:
    """Signed weight of the particle's own learning set.

    Magnitude ``1 - f_now / f_max`` (0 when ``f_max`` is 0); positive only if
    the particle's fitness strictly improved since the previous iteration.
    With no previous fitness the weight is 0.
    """
    if f_prev is None or f_max <= 0:
        return 0.0
    delta = 1.0 - f_now / f_max
    return delta if f_now < f_prev else -delta


def update_velocity(V, L_cog, L_soc1, L_soc2, L_i, delta: float,
                    r1: float, r2: float, cfg: UpsoConfig) -> np.ndarray:
    base = cfg.omega * V + cfg.c1 * r1 * L_cog + delta * L_i
    v_global = base + cfg.c2 * r2 * L_soc1
    v_local = base + cfg.c2 * r2 * L_soc2
    return cfg.u * v_global + (1.0 - cfg.u) * v_local


def update_position(V, rng: np.random.Generator | None = None, r: float | None = None):
    """Sample a new mask from velocity ``V``; returns ``(mask, xi)``.

    Pass ``r`` to force the roulette draw (it must lie in ``[0, sum(rho)]``).
    """
    V = np.asarray(V, dtype=float)
    rho = np.maximum(V[0], SELECTION_FLOOR)
    sigma = np.maximum(V[1], SELECTION_FLOOR)
    cum = np.cumsum(rho)
    if r is None:
        r = rng.uniform(0.0, cum[-1])
    xi = min(int(np.searchsorted(cum, r, side="left")) + 1, rho.size)
    order = np.argsort(-sigma, kind="stable")
    mask = np.zeros(rho.size, dtype=bool)
    mask[order[:xi]] = True
    return mask, xi


def ring_best(values: np.ndarray, radius: int) -> np.ndarray:
    """Index of the best (lowest) value within each particle's ring neighbourhood."""
    n = values.size
    out = np.empty(n, dtype=np.intp)
    for i in range(n):
        neigh = sorted({(i + d) % n for d in range(-radius, radius + 1)})
        out[i] = min(neigh, key=lambda j: (values[j], j))
    return out


def particle_rngs(seed: int, count: int) -> list:
    return [np.random.default_rng(s) for s in np.random.SeedSequence(int(seed)).spawn(count)]


def run_2d_upso(criterion: Criterion, cfg: UpsoConfig = UpsoConfig()) -> RunRecord:
    n = criterion.n_features
    rngs = particle_rngs(cfg.seed, cfg.ps)
    tracker = SearchTracker(criterion, cfg.budget)

    pos = np.array([g.random(n) < 0.5 for g in rngs])
    vel = np.array([g.random((2, n)) for g in rngs])
    fit = np.array([tracker.evaluate(p) for p in pos])

    pbest, pbest_val = pos.copy(), fit.copy()
    g = int(np.argmin(pbest_val))
    nb = ring_best(pbest_val, cfg.radius)
    count = np.zeros(cfg.ps, dtype=np.int64)
    prev_fit = None

    while tracker.remaining > 0:
        f_max = float(fit.max())
        new_pos = pos.copy()
        for i, rng in enumerate(rngs):
            if count[i] >= cfg.rg:
                vel[i] = rng.random((2, n))
                count[i] = 0
            L_cog = learning_set(pos[i], pbest[i])
            L_soc1 = learning_set(pos[i], pbest[g])
            L_soc2 = learning_set(pos[i], pbest[nb[i]])
            L_i = self_learning_set(pos[i])
            delta = fitness_feedback(fit[i], None if prev_fit is None else prev_fit[i], f_max)
            r1, r2 = rng.random(2)
            vel[i] = update_velocity(vel[i], L_cog, L_soc1, L_soc2, L_i, delta, r1, r2, cfg)
            new_pos[i], _ = update_position(vel[i], rng)

        prev_fit = fit.copy()
        old_pbest_val = pbest_val.copy()
        for i in range(min(cfg.ps, tracker.remaining)):
            pos[i] = new_pos[i]
            fit[i] = tracker.evaluate(pos[i])
            if fit[i] < pbest_val[i]:
                pbest_val[i] = fit[i]
                pbest[i] = pos[i]
        g = int(np.argmin(pbest_val))
        nb = ring_best(pbest_val, cfg.radius)
        count += pbest_val >= old_pbest_val

    return tracker.record("2D-UPSO", cfg.seed, cfg.to_dict())

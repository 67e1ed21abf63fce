"""Population methods: self-adaptive (mu+lambda) ES, particle swarm, CMA-ES."""

import math
from dataclasses import dataclass

import numpy as np


# ---------------------------------------------------------------------------
# (mu + lambda) evolution strategy with per-coordinate strategy vectors


@dataclass
class _Individual:
    x: np.ndarray
    strat: np.ndarray
    value: float = math.inf


def _blend(a: _Individual, b: _Individual, alpha: float, rng) -> _Individual:
    gamma = (1.0 + 2.0 * alpha) * rng.random(a.x.size) - alpha
    x = (1.0 - gamma) * a.x + gamma * b.x
    strat = (1.0 - gamma) * a.strat + gamma * b.strat
    return _Individual(x, strat)


def _mutate(ind: _Individual, c: float, indpb: float, rng) -> _Individual:
    nu = ind.x.size
    t = c / math.sqrt(2.0 * math.sqrt(nu))
    t0 = c / math.sqrt(2.0 * nu)
    n0 = rng.normal()
    x = ind.x.copy()
    strat = ind.strat.copy()
    for i in range(nu):
        if rng.random() < indpb:
            strat[i] *= math.exp(t0 * n0 + t * rng.normal())
            x[i] += strat[i] * rng.normal()
    return _Individual(x, strat)


def select_plus(pool: list[_Individual], mu: int, tournsize: int, rng) -> list[_Individual]:
    """Plus selection: the overall best always survives, the remaining
    slots are filled by size-``tournsize`` tournaments over the pool."""
    elite = min(pool, key=lambda ind: ind.value)
    chosen = [elite]
    while len(chosen) < mu:
        contenders = [pool[int(rng.integers(len(pool)))] for _ in range(tournsize)]
        chosen.append(min(contenders, key=lambda ind: ind.value))
    return chosen


def mu_plus_lambda(costfn, x0, hparams, rng, gradient=None, context=None):
    """Parents and offspring compete; selection is tournament with an elite.

    Offspring arise from blend crossover or log-normal self-adaptive
    mutation (probabilities cxpb = pb_sum*pb_cut and mutpb = pb_sum - cxpb),
    otherwise cloning. Strategy vectors stay clamped to
    [min_strat, max_strat]; the overall best individual always survives.
    """
    pb_sum, pb_cut = hparams["pb_sum"], hparams["pb_cut"]
    if pb_sum > 1.0:
        raise ValueError("pb_sum must be <= 1")
    cxpb = pb_sum * pb_cut
    mu = int(hparams["mu"])
    lam = mu * int(hparams["lambda_factor"])
    lo, hi = hparams["min_strat"], hparams["max_strat"]
    sigma = hparams["sigma"]
    tournsize = max(1, int(hparams["tournsize"]))

    def clamp(ind: _Individual) -> _Individual:
        np.clip(ind.strat, lo, hi, out=ind.strat)
        return ind

    x0 = np.asarray(x0, dtype=np.float64)
    parents = []
    for _ in range(mu):
        ind = clamp(_Individual(x0 + rng.normal(0.0, sigma, x0.size),
                                np.full(x0.size, sigma)))
        ind.value = costfn(ind.x)
        parents.append(ind)

    while True:
        offspring = []
        for _ in range(lam):
            roll = rng.random()
            if roll < cxpb:
                i, j = rng.choice(len(parents), size=2, replace=False) \
                    if len(parents) > 1 else (0, 0)
                child = _blend(parents[int(i)], parents[int(j)], hparams["alpha"], rng)
            elif roll < pb_sum:
                child = _mutate(parents[int(rng.integers(len(parents)))],
                                hparams["c"], hparams["indpb"], rng)
            else:
                src = parents[int(rng.integers(len(parents)))]
                child = _Individual(src.x.copy(), src.strat.copy())
            clamp(child)
            child.value = costfn(child.x)
            offspring.append(child)
        parents = select_plus(parents + offspring, mu, tournsize, rng)


# ---------------------------------------------------------------------------
# Particle swarm


def pso(costfn, x0, hparams, rng, gradient=None, context=None):
    """Velocity-clamped particle swarm seeded around the starting point."""
    pop = max(2, int(hparams["pop_size"]))
    smin, smax = hparams["smin"], hparams["smax"]
    phi1, phi2 = hparams["phi1"], hparams["phi2"]
    x0 = np.asarray(x0, dtype=np.float64)
    nu = x0.size
    pos = x0 + rng.normal(0.0, hparams["ind_sigma"], (pop, nu))
    vel = np.zeros((pop, nu))
    pbest = pos.copy()
    pbest_val = np.full(pop, math.inf)
    gbest = pos[0].copy()
    gbest_val = math.inf
    while True:
        for i in range(pop):
            v = costfn(pos[i])
            if v < pbest_val[i]:
                pbest_val[i] = v
                pbest[i] = pos[i].copy()
            if v < gbest_val:
                gbest_val = v
                gbest = pos[i].copy()
        vel += rng.uniform(0.0, phi1, (pop, nu)) * (pbest - pos)
        vel += rng.uniform(0.0, phi2, (pop, nu)) * (gbest - pos)
        np.clip(vel, smin, smax, out=vel)
        pos += vel


# ---------------------------------------------------------------------------
# CMA-ES (standard (mu/mu_w, lambda) strategy, single exposed sigma0)


def cma_population_size(n: int) -> int:
    return 4 + int(3 * math.log(n))


def cmaes(costfn, x0, hparams, rng, gradient=None, context=None):
    """Covariance matrix adaptation with rank-1/rank-mu updates and CSA."""
    xmean = np.array(x0, dtype=np.float64)
    n = xmean.size
    sigma = hparams["sigma0"]

    lam = cma_population_size(n)
    mu = lam // 2
    raw = math.log(mu + 0.5) - np.log(np.arange(1, mu + 1))
    weights = raw / raw.sum()
    mueff = 1.0 / np.sum(weights ** 2)

    cc = (4 + mueff / n) / (n + 4 + 2 * mueff / n)
    cs = (mueff + 2) / (n + mueff + 5)
    c1 = 2 / ((n + 1.3) ** 2 + mueff)
    cmu = min(1 - c1, 2 * (mueff - 2 + 1 / mueff) / ((n + 2) ** 2 + mueff))
    damps = 1 + 2 * max(0.0, math.sqrt((mueff - 1) / (n + 1)) - 1) + cs
    chi_n = math.sqrt(n) * (1 - 1 / (4 * n) + 1 / (21 * n * n))

    pc = np.zeros(n)
    ps = np.zeros(n)
    cov = np.eye(n)
    gen = 0
    while True:
        vals, vecs = np.linalg.eigh(cov)
        vals = np.maximum(vals, 1e-12)
        inv_sqrt = vecs @ np.diag(1.0 / np.sqrt(vals)) @ vecs.T
        sqrt_cov = vecs @ np.diag(np.sqrt(vals)) @ vecs.T

        zs = rng.normal(size=(lam, n))
        ys = zs @ sqrt_cov.T
        xs = xmean + sigma * ys
        fitness = np.array([costfn(x) for x in xs])
        order = np.argsort(fitness)
        sel = order[:mu]

        y_w = weights @ ys[sel]
        xmean = xmean + sigma * y_w
        gen += 1

        ps = (1 - cs) * ps + math.sqrt(cs * (2 - cs) * mueff) * (inv_sqrt @ y_w)
        h_sig = float(np.linalg.norm(ps) /
                      math.sqrt(1 - (1 - cs) ** (2 * gen)) / chi_n < 1.4 + 2 / (n + 1))
        pc = (1 - cc) * pc + h_sig * math.sqrt(cc * (2 - cc) * mueff) * y_w

        rank1 = np.outer(pc, pc)
        rank_mu = (ys[sel].T * weights) @ ys[sel]
        cov = ((1 - c1 - cmu) * cov
               + c1 * (rank1 + (1 - h_sig) * cc * (2 - cc) * cov)
               + cmu * rank_mu)
        cov = (cov + cov.T) / 2.0
        sigma *= math.exp((cs / damps) * (np.linalg.norm(ps) / chi_n - 1))

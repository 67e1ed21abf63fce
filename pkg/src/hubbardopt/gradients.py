"""Gradient subroutines and the finite-difference step-size sweep.

Finite differences cost 2*nu evaluations per gradient; simultaneous
perturbation costs 2 regardless of dimension. The exact gradient used as
the sweep reference is a tight central difference on the noiseless cost.
"""

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .ansatz import spec_for
from .costfn import exact_cost, statistical_cost
from .model import HubbardInstance

FD_DEFAULT_STEP = 0.4
SP_DEFAULT_STEP = 0.15
EXACT_GRADIENT_STEP = 1e-5


@dataclass(frozen=True)
class GradientSpec:
    kind: str  # "finite_difference" | "simultaneous_perturbation" | "exact"
    step: float = 0.0

    def __post_init__(self):
        if self.kind not in ("finite_difference", "simultaneous_perturbation", "exact"):
            raise ValueError(f"unknown gradient kind {self.kind!r}")
        if self.kind != "exact" and self.step <= 0:
            raise ValueError("gradient step must be positive")

    @classmethod
    def fd(cls, step: float = FD_DEFAULT_STEP) -> "GradientSpec":
        return cls("finite_difference", step)

    @classmethod
    def sp(cls, step: float = SP_DEFAULT_STEP) -> "GradientSpec":
        return cls("simultaneous_perturbation", step)

    @classmethod
    def exact(cls) -> "GradientSpec":
        return cls("exact", EXACT_GRADIENT_STEP)

    @property
    def calls_per_gradient(self) -> int:
        """Recorded cost-function calls one gradient evaluation consumes."""
        return {"finite_difference": -1, "simultaneous_perturbation": 2, "exact": 0}[self.kind]


def finite_difference(costfn, theta: np.ndarray, eps: float) -> np.ndarray:
    """Central differences, one coordinate at a time: 2*nu calls."""
    theta = np.asarray(theta, dtype=np.float64)
    grad = np.empty(theta.size)
    for k in range(theta.size):
        e = np.zeros(theta.size)
        e[k] = eps
        grad[k] = (costfn(theta + e) - costfn(theta - e)) / (2.0 * eps)
    return grad


def simultaneous_perturbation(
    costfn, theta: np.ndarray, eps: float, rng: np.random.Generator
) -> np.ndarray:
    """SPSA-style gradient: one random Rademacher direction, 2 calls."""
    theta = np.asarray(theta, dtype=np.float64)
    delta = rng.integers(0, 2, size=theta.size) * 2 - 1
    diff = costfn(theta + eps * delta) - costfn(theta - eps * delta)
    return diff / (2.0 * eps * delta)


def exact_gradient(
    instance: HubbardInstance, theta: np.ndarray, eps: float = EXACT_GRADIENT_STEP
) -> np.ndarray:
    """Reference gradient: central differences on the exact cost."""
    return finite_difference(lambda p: exact_cost(instance, p), theta, eps)


def make_gradient(spec: GradientSpec, costfn, instance: HubbardInstance, rng: np.random.Generator):
    """Gradient closure for the gradient-descent family.

    The exact variant differentiates the noiseless cost directly and
    consumes no recorded calls.
    """
    if spec.kind == "finite_difference":
        return lambda theta: finite_difference(costfn, theta, spec.step)
    if spec.kind == "simultaneous_perturbation":
        return lambda theta: simultaneous_perturbation(costfn, theta, spec.step, rng)
    return lambda theta: exact_gradient(instance, theta)


# ---------------------------------------------------------------------------
# Step-size sweeping (FD gradient error vs. the exact gradient)


@dataclass(frozen=True)
class SweepPoint:
    point: int
    best_eps: float
    err_at_best: float
    err_first: float
    err_last: float


def default_eps_grid() -> np.ndarray:
    """999 step sizes, 0.001 to 0.999."""
    return np.round(np.arange(1, 1000) * 0.001, 3)


def _sweep_one_point(instance: HubbardInstance, seed: int, point: int,
                     eps_grid: np.ndarray, nshots: int | None) -> SweepPoint:
    if nshots is not None and nshots != instance.nshots:
        instance = HubbardInstance(instance.grid, instance.params, instance.occupation,
                                   instance.nlayers, nshots)
    nu = spec_for(instance).nparams
    rng = np.random.default_rng([seed, point])
    theta = rng.uniform(0.0, 2.0 * np.pi, nu)
    ref = exact_gradient(instance, theta)
    errs = np.empty(eps_grid.size)
    for i, eps in enumerate(eps_grid):
        g = finite_difference(
            lambda p: statistical_cost(instance, p, rng).value, theta, float(eps)
        )
        errs[i] = np.linalg.norm(g - ref)
    best = int(np.argmin(errs))
    return SweepPoint(point, float(eps_grid[best]), float(errs[best]),
                      float(errs[0]), float(errs[-1]))


def sweep_step_size(
    instance: HubbardInstance,
    n_points: int = 100,
    eps_grid: np.ndarray | None = None,
    seed: int = 0,
    nshots: int | None = None,
    jobs: int | None = None,
) -> list[SweepPoint]:
    """Best FD step size per random parameter point.

    For each point the statistical FD gradient is compared against the
    exact gradient over the whole step grid; points are independent and
    run in parallel when jobs > 1. nshots overrides the instance's shot
    count (the protocol tolerates reduced shots).
    """
    if eps_grid is None:
        eps_grid = default_eps_grid()
    jobs = jobs or 1
    args = [(instance, seed, p, eps_grid, nshots) for p in range(n_points)]
    if jobs == 1:
        return [_sweep_one_point(*a) for a in args]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_sweep_one_point, *zip(*args), chunksize=1))


def sweep_summary(points: list[SweepPoint]) -> dict:
    best = np.array([p.best_eps for p in points])
    return {
        "mean_best_eps": float(best.mean()),
        "median_best_eps": float(np.median(best)),
        "n_points": len(points),
    }


def write_sweep_csv(points: list[SweepPoint], path) -> None:
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["point", "best_eps", "err_at_best"])
        for p in points:
            writer.writerow([p.point, repr(p.best_eps), repr(p.err_at_best)])


def default_sweep_jobs() -> int:
    return max(1, os.cpu_count() or 1)

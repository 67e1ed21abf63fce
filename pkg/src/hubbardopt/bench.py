"""Benchmark instance enumeration, hyperparameter sweeping, campaign runner.

The four benchmark families total 372 instances. A campaign is a plan of
(instance, optimizer, hyperparameter set, seed) runs; each run writes one
CSV trace ending in a completion marker, so interrupted campaigns resume
by skipping complete files.
"""

import hashlib
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

from pathlib import Path

import numpy as np

from .costfn import TerminationPolicy, is_complete_log
from .gradients import GradientSpec
from .model import (
    GridSpec,
    HubbardInstance,
    HubbardParams,
    exact_ground_energy,
    occupation_for,
)
from .optimizers import GRADIENT_FAMILY, REGISTRY, HyperRange, run

U_VALUES = (2.0, 4.0, 8.0)
SHOT_COUNTS = (1000, 10000)

BENCHMARKS = {
    1: {"grids": ((1, 2),), "fillings": ("half",), "layers": (2, 5)},
    2: {"grids": ((1, 3), (1, 4), (2, 2), (1, 5), (1, 6), (2, 3)),
        "fillings": ("half", "quarter"), "layers": (2, 5, 8)},
    3: {"grids": ((1, 7), (1, 8), (2, 4)),
        "fillings": ("half", "quarter"), "layers": (5, 8, 10)},
    4: {"grids": ((3, 3),), "fillings": ("half", "quarter"), "layers": (5, 8, 10)},
}

DESK_SCALE_BENCHMARKS = (1, 2)


def _format_u(u: float) -> str:
    return str(int(u)) if float(u).is_integer() else str(u)


def instance_id(benchmark: int, instance: HubbardInstance, filling: str) -> str:
    g = instance.grid
    return (f"b{benchmark}_{g.rows}x{g.cols}_U{_format_u(instance.params.u)}"
            f"_{filling}_L{instance.nlayers}_S{instance.nshots}")


@dataclass(frozen=True)
class NamedInstance:
    id: str
    instance: HubbardInstance
    filling: str
    benchmark: int | None = None


def enumerate_instances(benchmarks=(1, 2, 3, 4)) -> list[NamedInstance]:
    """Cartesian products per benchmark family (12 + 216 + 108 + 36)."""
    out = []
    for b in benchmarks:
        cfg = BENCHMARKS[b]
        for rows, cols in cfg["grids"]:
            grid = GridSpec(rows, cols)
            for u in U_VALUES:
                for filling in cfg["fillings"]:
                    occ = occupation_for(filling, grid)
                    for layers in cfg["layers"]:
                        for shots in SHOT_COUNTS:
                            inst = HubbardInstance(grid, HubbardParams(u=u), occ,
                                                   layers, shots)
                            out.append(NamedInstance(instance_id(b, inst, filling),
                                                     inst, filling, b))
    return out


def sweeping_instances() -> list[NamedInstance]:
    """The four instances isolated for hyperparameter and gradient sweeping."""
    defs = [
        ((3, 1), 4.0, "quarter", 2, 1000),
        ((2, 2), 2.0, "quarter", 5, 10000),
        ((5, 1), 8.0, "half", 8, 10000),
        ((3, 2), 4.0, "half", 5, 1000),
    ]
    out = []
    for (rows, cols), u, filling, layers, shots in defs:
        grid = GridSpec(rows, cols)
        inst = HubbardInstance(grid, HubbardParams(u=u), occupation_for(filling, grid),
                               layers, shots)
        out.append(NamedInstance(
            f"sweep_{rows}x{cols}_U{_format_u(u)}_{filling}_L{layers}_S{shots}",
            inst, filling))
    return out


def find_instance(name: str) -> NamedInstance:
    for ni in enumerate_instances() + sweeping_instances():
        if ni.id == name:
            return ni
    raise KeyError(f"unknown instance id {name!r}")


# ---------------------------------------------------------------------------
# Hyperparameter sweeping (random search over the declared spaces)


def sample_hparams(space: dict[str, HyperRange], defaults: dict,
                   rng: np.random.Generator) -> dict:
    """One draw from the sweep space.

    Positive floats move log-uniformly within two decades of the default;
    unit-interval values are uniform; categoricals uniform over options;
    integer knobs use the log rule rounded with a floor of 1.
    """
    out = {}
    for key, hr in space.items():
        d = defaults[key]
        if hr.kind == "categorical":
            out[key] = hr.options[int(rng.integers(len(hr.options)))]
        elif hr.kind == "unit-interval":
            out[key] = float(rng.uniform(0.0, 1.0))
        elif hr.kind == "positive-log":
            out[key] = float(np.exp(rng.uniform(np.log(d / 100.0), np.log(d * 100.0))))
        elif hr.kind == "negative-log":
            mag = abs(d)
            out[key] = -float(np.exp(rng.uniform(np.log(mag / 100.0), np.log(mag * 100.0))))
        elif hr.kind == "int-log":
            val = np.exp(rng.uniform(np.log(max(d, 1) / 100.0), np.log(max(d, 1) * 100.0)))
            out[key] = max(1, int(round(val)))
        else:
            raise ValueError(f"unknown sweep kind {hr.kind!r}")
    return out


@dataclass
class SweepTrial:
    hparams: dict
    best_value: float


def sweep_hyperparameters(
    optimizer_name: str,
    named: NamedInstance,
    trials: int = 1000,
    eval_budget: int = 100,
    seed: int = 0,
    gradient_spec: GradientSpec | None = None,
) -> tuple[dict, list[SweepTrial]]:
    """Random-search the optimizer's space; objective is the best noisy
    value reached within the 100-call budget. Returns (best hparams, trials).
    """
    info = REGISTRY[optimizer_name]
    if not info.space:
        return dict(info.defaults), []
    if info.needs_gradient and gradient_spec is None:
        gradient_spec = GradientSpec.fd()
    rng = np.random.default_rng([seed, _stable_hash(optimizer_name, named.id)])
    policy = TerminationPolicy(max_calls=eval_budget)
    results = []
    for t in range(trials):
        hp = sample_hparams(info.space, info.defaults, rng)
        res = run(optimizer_name, named.instance, hparams=hp,
                  gradient_spec=gradient_spec, policy=policy,
                  seed=_stable_hash(optimizer_name, named.id, str(t), str(seed)))
        results.append(SweepTrial(hp, res.best_value))
    best = min(results, key=lambda r: (r.best_value, results.index(r)))
    return best.hparams, results


# ---------------------------------------------------------------------------
# Campaign running


@dataclass(frozen=True)
class RunSpec:
    instance_id: str
    optimizer: str
    gradient: str | None  # "fd" | "sp" | "exact" | None
    hparam_set: str
    hparams: dict
    seed_index: int

    @property
    def label(self) -> str:
        return self.optimizer + (f"_{self.gradient}" if self.gradient else "")

    def filename(self) -> str:
        return f"{self.label}_{self.hparam_set}_{self.instance_id}_{self.seed_index}.csv"


def _stable_hash(*parts: str) -> int:
    digest = hashlib.sha256("|".join(parts).encode()).digest()
    return int.from_bytes(digest[:8], "big") >> 1


def run_seed(master_seed: int, spec: RunSpec) -> int:
    return _stable_hash(str(master_seed), spec.instance_id, spec.label,
                        spec.hparam_set, str(spec.seed_index))


def build_plan(
    instances: list[NamedInstance],
    optimizers: list[str],
    hparam_sets: dict[str, dict[str, dict]] | None = None,
    seeds: int = 1,
) -> list[RunSpec]:
    """Cross product of instances, optimizers (gradient family split into
    fd/sp variants), hyperparameter sets (defaults always included), seeds.
    """
    plan = []
    hparam_sets = hparam_sets or {}
    for ni in instances:
        for opt in optimizers:
            sets = {"default": {}}
            sets.update(hparam_sets.get(opt, {}))
            gradients = ("fd", "sp") if opt in GRADIENT_FAMILY else (None,)
            for grad in gradients:
                for set_name, hp in sets.items():
                    for s in range(seeds):
                        plan.append(RunSpec(ni.id, opt, grad, set_name, dict(hp), s))
    return plan


def _gradient_spec_for(name: str | None) -> GradientSpec | None:
    if name is None:
        return None
    return {"fd": GradientSpec.fd(), "sp": GradientSpec.sp(),
            "exact": GradientSpec.exact()}[name]


def execute_run(spec: RunSpec, out_dir: str, master_seed: int,
                policy: TerminationPolicy = TerminationPolicy()) -> str:
    """Run one plan entry, streaming its trace to the output CSV."""
    ni = find_instance(spec.instance_id)
    path = Path(out_dir) / spec.filename()
    with open(path, "w", newline="") as fh:
        run(spec.optimizer, ni.instance, hparams=spec.hparams,
            gradient_spec=_gradient_spec_for(spec.gradient), policy=policy,
            seed=run_seed(master_seed, spec), stream=fh, deterministic_time=True)
    return str(path)


def run_campaign(
    plan: list[RunSpec],
    out_dir,
    master_seed: int = 0,
    policy: TerminationPolicy = TerminationPolicy(),
    jobs: int = 1,
) -> dict:
    """Execute all pending runs; existing complete traces are skipped.

    Writes manifest.json (plan, seeds, ground energies) and the
    ground_energies.csv sidecar. Returns summary counts.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ids = sorted({spec.instance_id for spec in plan})
    energies = {}
    for iid in ids:
        ni = find_instance(iid)
        energies[iid] = exact_ground_energy(ni.instance)
    write_ground_energy_sidecar(out / "ground_energies.csv", ids)
    manifest = {
        "master_seed": master_seed,
        "policy": {"max_calls": policy.max_calls,
                   "max_wall_seconds": policy.max_wall_seconds},
        "ground_energies": energies,
        "runs": [asdict(spec) for spec in plan],
        "created": time.strftime("%Y-%m-%dT%H:%M:%S"),
    }
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)

    pending = [spec for spec in plan if not is_complete_log(out / spec.filename())]
    if jobs <= 1:
        for spec in pending:
            execute_run(spec, str(out), master_seed, policy)
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(execute_run, spec, str(out), master_seed, policy)
                       for spec in pending]
            for f in futures:
                f.result()
    return {"total": len(plan), "executed": len(pending),
            "skipped": len(plan) - len(pending)}


def write_ground_energy_sidecar(path, ids: list[str]) -> None:
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["grid", "u", "n_up", "n_down", "energy"])
        for iid in sorted(ids):
            ni = find_instance(iid)
            inst = ni.instance
            writer.writerow([str(inst.grid), _format_u(inst.params.u),
                             inst.occupation.n_up, inst.occupation.n_down,
                             repr(exact_ground_energy(inst))])


# ---------------------------------------------------------------------------
# Expressivity check on exact cost functions


def expressivity_check(
    instances: list[NamedInstance],
    optimizers: tuple[str, ...] = ("nelder_mead",),
    budget: int = 5000,
    seed: int = 0,
    externals: dict | None = None,
) -> list[dict]:
    """Minimize the exact cost per instance; report the best final energy.

    externals maps names to ExternalCommand adapters to run alongside the
    native optimizers. The degenerate-ground-state case (2x2 at half
    filling) is flagged anomalous in the output.
    """
    rows = []
    for ni in instances:
        ground = exact_ground_energy(ni.instance)
        best = math.inf
        for opt in optimizers:
            res = run(opt, ni.instance, policy=TerminationPolicy(max_calls=budget),
                      seed=_stable_hash(str(seed), ni.id, opt), exact=True)
            best = min(best, res.best_value)
        for name, command in (externals or {}).items():
            res = run(name, ni.instance, policy=TerminationPolicy(max_calls=budget),
                      seed=_stable_hash(str(seed), ni.id, name), exact=True,
                      external=command)
            if res.stop_reason != "failed":
                best = min(best, res.best_value)
        grid = ni.instance.grid
        rows.append({
            "instance": ni.id,
            "grid": str(grid),
            "u": ni.instance.params.u,
            "occ": ni.instance.occupation.total,
            "layers": ni.instance.nlayers,
            "best_energy": best,
            "ground_energy": ground,
            "error": best - ground,
            "anomalous": grid.rows * grid.cols == 4 and grid.rows == grid.cols
                         and ni.filling == "half",
        })
    return rows


def write_expressivity_csv(rows: list[dict], path) -> None:
    import csv

    cols = ["instance", "grid", "u", "occ", "layers", "best_energy",
            "ground_energy", "error", "anomalous"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(cols)
        for row in rows:
            writer.writerow([row[c] for c in cols])

"""Comparison metrics over recorded runs and plot-ready summary tables.

Works from the campaign manifest plus per-run CSV traces. The reported
series is the running best exact energy (non-increasing, never below the
ground energy); optimizer comparisons use the normalized final error
(divided by the site count) and calls-to-tolerance counts.
"""

import csv
import json
import math
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .costfn import RunRecord, read_csv

DEFAULT_TOLERANCES = (0.1, 0.01, 0.001)
SELF_TOLERANCE = 0.001
WINNER_ROUNDING = 5


@dataclass
class RunSummary:
    instance_id: str
    optimizer: str
    hparam_set: str
    seed_index: int
    final_best_exact: float
    normalized_error: float
    calls_to_tolerance: dict[float, int | None]
    calls_to_self_tolerance: int
    total_calls: int
    total_nmeas: int
    shots: int = 0
    filling: str = ""
    grid_sites: int = 0
    noisy_fallback: bool = False


def _exact_series(records: list[RunRecord]) -> tuple[np.ndarray, np.ndarray, bool]:
    """(iters, values, used_noisy_fallback) with NaN rows dropped."""
    iters = np.array([r.iter for r in records])
    exact = np.array([r.exact_value for r in records])
    keep = ~np.isnan(exact)
    if keep.any():
        return iters[keep], exact[keep], False
    noisy = np.array([r.value for r in records])
    keep = ~np.isnan(noisy)
    return iters[keep], noisy[keep], True


def running_best(values: np.ndarray) -> np.ndarray:
    return np.minimum.accumulate(values)


def calls_to_tolerance(records: list[RunRecord], ground_energy: float,
                       tolerance: float) -> int | None:
    """First call index whose exact value is within tolerance of ground."""
    iters, values, _ = _exact_series(records)
    hit = np.flatnonzero(values <= ground_energy + tolerance)
    return int(iters[hit[0]]) if hit.size else None


def calls_to_self_tolerance(records: list[RunRecord],
                            tolerance: float = SELF_TOLERANCE) -> int:
    """Calls to get within tolerance of the run's own final best energy."""
    iters, values, _ = _exact_series(records)
    best = values.min()
    hit = np.flatnonzero(values <= best + tolerance)
    return int(iters[hit[0]])


def summarize_run(
    records: list[RunRecord],
    ground_energy: float,
    grid_sites: int,
    tolerances=DEFAULT_TOLERANCES,
    instance_id: str = "",
    optimizer: str = "",
    hparam_set: str = "default",
    seed_index: int = 0,
    shots: int = 0,
    filling: str = "",
) -> RunSummary:
    if not records:
        raise ValueError("empty run")
    if math.isnan(ground_energy):
        raise ValueError("ground energy required")
    iters, values, fallback = _exact_series(records)
    best = float(values.min())
    return RunSummary(
        instance_id=instance_id,
        optimizer=optimizer,
        hparam_set=hparam_set,
        seed_index=seed_index,
        final_best_exact=best,
        normalized_error=(best - ground_energy) / grid_sites,
        calls_to_tolerance={t: calls_to_tolerance(records, ground_energy, t)
                            for t in tolerances},
        calls_to_self_tolerance=calls_to_self_tolerance(records),
        total_calls=len(records),
        total_nmeas=records[-1].nmeas,
        shots=shots,
        filling=filling,
        grid_sites=grid_sites,
        noisy_fallback=fallback,
    )


def summarize_campaign(run_dir, tolerances=DEFAULT_TOLERANCES) -> list[RunSummary]:
    """Summaries for every complete run listed in the campaign manifest."""
    from .bench import RunSpec, find_instance

    run_dir = Path(run_dir)
    with open(run_dir / "manifest.json") as fh:
        manifest = json.load(fh)
    energies = manifest["ground_energies"]
    summaries = []
    for entry in manifest["runs"]:
        spec = RunSpec(**entry)
        path = run_dir / spec.filename()
        if not path.exists():
            continue
        records = read_csv(path)
        if not records:
            continue
        ni = find_instance(spec.instance_id)
        summaries.append(summarize_run(
            records, energies[spec.instance_id], ni.instance.grid.sites,
            tolerances=tolerances, instance_id=spec.instance_id,
            optimizer=spec.label, hparam_set=spec.hparam_set,
            seed_index=spec.seed_index, shots=ni.instance.nshots,
            filling=ni.filling,
        ))
    return summaries


def best_per_optimizer(summaries: list[RunSummary]) -> list[RunSummary]:
    """Collapse hyperparameter sets and seeds: best final exact energy per
    (instance, optimizer)."""
    chosen: dict[tuple[str, str], RunSummary] = {}
    for s in sorted(summaries, key=lambda s: (s.instance_id, s.optimizer,
                                              s.hparam_set, s.seed_index)):
        key = (s.instance_id, s.optimizer)
        if key not in chosen or s.final_best_exact < chosen[key].final_best_exact:
            chosen[key] = s
    return list(chosen.values())


def winners(summaries: list[RunSummary], rounding: int = WINNER_ROUNDING) -> dict:
    """Per-optimizer win counts; ties after rounding are shared.

    Returns counts for the full set and sliced by shot count and filling.
    """
    best = best_per_optimizer(summaries)
    by_instance: dict[str, list[RunSummary]] = defaultdict(list)
    for s in best:
        by_instance[s.instance_id].append(s)
    slices: dict[str, dict[str, int]] = defaultdict(lambda: defaultdict(int))
    for inst, group in sorted(by_instance.items()):
        rounded = [round(s.final_best_exact, rounding) for s in group]
        top = min(rounded)
        for s, r in zip(group, rounded):
            if r == top:
                keys = ["all"]
                if s.shots:
                    keys.append(f"shots_{s.shots}")
                if s.filling:
                    keys.append(f"filling_{s.filling}")
                for key in keys:
                    slices[key][s.optimizer] += 1
    return {k: dict(v) for k, v in slices.items()}


def optimizer_order(summaries: list[RunSummary]) -> list[str]:
    """Optimizers sorted by mean normalized error (the headline ordering)."""
    groups: dict[str, list[float]] = defaultdict(list)
    for s in summaries:
        groups[s.optimizer].append(s.normalized_error)
    return sorted(groups, key=lambda o: (float(np.mean(groups[o])), o))


def _box_stats(values: np.ndarray) -> dict:
    q1, med, q3 = np.percentile(values, [25, 50, 75])
    iqr = q3 - q1
    inside = values[(values >= q1 - 1.5 * iqr) & (values <= q3 + 1.5 * iqr)]
    return {
        "n": values.size,
        "mean": float(values.mean()),
        "q1": float(q1),
        "median": float(med),
        "q3": float(q3),
        "whisker_lo": float(inside.min()),
        "whisker_hi": float(inside.max()),
    }


def emit_tables(summaries: list[RunSummary], out_dir,
                tolerances=DEFAULT_TOLERANCES) -> dict[str, str]:
    """Write the plot-ready tables; returns {table name: path}.

    Tables: per-run normalized errors (boxplot input), per-optimizer error
    stats with 1.5*IQR whiskers, calls-to-tolerance, winner counts, and the
    FD-vs-SP pairing for the gradient family.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    best = best_per_optimizer(summaries)
    order = optimizer_order(best)
    paths = {}

    path = out_dir / "final_errors.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["optimizer", "instance", "normalized_error"])
        for opt in order:
            for s in sorted((s for s in best if s.optimizer == opt),
                            key=lambda s: s.instance_id):
                w.writerow([opt, s.instance_id, repr(s.normalized_error)])
    paths["final_errors"] = str(path)

    path = out_dir / "error_stats.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["optimizer", "n", "mean", "q1", "median", "q3",
                    "whisker_lo", "whisker_hi"])
        for opt in order:
            vals = np.array([s.normalized_error for s in best if s.optimizer == opt])
            st = _box_stats(vals)
            w.writerow([opt, st["n"], repr(st["mean"]), repr(st["q1"]),
                        repr(st["median"]), repr(st["q3"]),
                        repr(st["whisker_lo"]), repr(st["whisker_hi"])])
    paths["error_stats"] = str(path)

    path = out_dir / "calls_to_tolerance.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["optimizer", "tolerance", "n_reached", "mean_calls",
                    "median_calls"])
        for opt in order:
            for tol in tolerances:
                calls = [s.calls_to_tolerance.get(tol) for s in best
                         if s.optimizer == opt and s.calls_to_tolerance.get(tol) is not None]
                w.writerow([opt, tol, len(calls),
                            repr(float(np.mean(calls))) if calls else "",
                            repr(float(np.median(calls))) if calls else ""])
    paths["calls_to_tolerance"] = str(path)

    path = out_dir / "winners.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["slice", "optimizer", "wins"])
        counts = winners(summaries)
        for slc in sorted(counts):
            for opt in sorted(counts[slc], key=lambda o: (-counts[slc][o], o)):
                w.writerow([slc, opt, counts[slc][opt]])
    paths["winners"] = str(path)

    path = out_dir / "fd_vs_sp.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["optimizer", "instance", "fd_error", "sp_error",
                    "fd_calls_to_self", "sp_calls_to_self"])
        by_key = {(s.optimizer, s.instance_id): s for s in best}
        bases = sorted({o[:-3] for o in order if o.endswith("_fd")})
        for base in bases:
            ids = sorted({inst for (opt, inst) in by_key
                          if opt in (base + "_fd", base + "_sp")})
            for inst in ids:
                fd = by_key.get((base + "_fd", inst))
                sp = by_key.get((base + "_sp", inst))
                if fd is None or sp is None:
                    continue
                w.writerow([base, inst, repr(fd.normalized_error),
                            repr(sp.normalized_error),
                            fd.calls_to_self_tolerance, sp.calls_to_self_tolerance])
    paths["fd_vs_sp"] = str(path)
    return paths

"""Command-line workbench: ground energies, runs, sweeps, campaigns."""

import csv
import json
import sys
from pathlib import Path

import click

from . import analysis as analysis_mod
from . import bench, gradients
from .costfn import TerminationPolicy, write_csv
from .gradients import GradientSpec
from .model import (
    GridSpec,
    HubbardInstance,
    HubbardParams,
    Occupation,
    exact_ground_energy,
    occupation_for,
)
from .optimizers import REGISTRY, run as run_optimizer
from .qng import qng_run


def _parse_grid(text: str) -> GridSpec:
    try:
        rows, cols = text.lower().split("x")
        return GridSpec(int(rows), int(cols))
    except ValueError as exc:
        raise click.BadParameter(f"grid must look like 2x3, got {text!r}") from exc


def _parse_occupation(text: str, grid: GridSpec) -> Occupation:
    if text in ("half", "quarter"):
        return occupation_for(text, grid)
    total = int(text)
    if total % 2:
        raise click.BadParameter("occupation number must be even (n_up = n_down)")
    return Occupation(total // 2, total // 2)


@click.group()
def main():
    """Fermi-Hubbard VQE optimizer workbench."""


@main.command("exact-ground")
@click.option("--grid", required=True, help="grid size, e.g. 2x3")
@click.option("--u", required=True, type=float, help="Coulomb potential")
@click.option("--occ", default="half", help="occupation number, or half/quarter")
@click.option("--format", "fmt", type=click.Choice(["text", "csv"]), default="text")
@click.option("--sidecar", type=click.Path(), default="ground_energies.csv",
              show_default=True, help="energy cache file to append to")
def exact_ground(grid, u, occ, fmt, sidecar):
    """Exact sector-restricted ground energy of one problem."""
    gs = _parse_grid(grid)
    occupation = _parse_occupation(occ, gs)
    inst = HubbardInstance(gs, HubbardParams(u=u), occupation, 1, 1000)
    energy = exact_ground_energy(inst)
    row = [str(gs), bench._format_u(u), occupation.n_up, occupation.n_down, repr(energy)]
    if fmt == "csv":
        click.echo(",".join(str(x) for x in row))
    else:
        click.echo(f"grid {gs}  U={u}  occupation ({occupation.n_up},{occupation.n_down})"
                   f"  ground energy {energy:.9f}")
    path = Path(sidecar)
    seen = set()
    if path.exists():
        with open(path, newline="") as fh:
            seen = {tuple(r[:4]) for r in csv.reader(fh)}
    with open(path, "a", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if not seen:
            writer.writerow(["grid", "u", "n_up", "n_down", "energy"])
        if tuple(str(x) for x in row[:4]) not in seen:
            writer.writerow(row)


@main.command("run")
@click.option("--optimizer", "name", required=True,
              help="native optimizer, or qng-gd / qng-nat / qng-ite")
@click.option("--instance", "instance_id", required=True)
@click.option("--hparams", "hparams_file", type=click.Path(exists=True), default=None,
              help="JSON file of hyperparameter overrides")
@click.option("--gradient", type=click.Choice(["fd", "sp", "exact"]), default=None)
@click.option("--eta", type=float, default=0.01, show_default=True,
              help="learning rate for the qng family")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--budget", type=int, default=5000, show_default=True)
@click.option("--walltime", type=float, default=3600.0, show_default=True)
@click.option("--exact-cost", is_flag=True, help="optimize the noiseless cost")
@click.option("--out", type=click.Path(), default=None, help="trace CSV path")
def run_cmd(name, instance_id, hparams_file, gradient, eta, seed, budget, walltime,
            exact_cost, out):
    """One recorded optimizer run on one instance."""
    ni = bench.find_instance(instance_id)
    policy = TerminationPolicy(max_calls=budget, max_wall_seconds=walltime)
    hparams = None
    if hparams_file:
        with open(hparams_file) as fh:
            hparams = json.load(fh)
    if name.startswith("qng-"):
        spec = {"fd": GradientSpec.fd(), "sp": GradientSpec.sp(),
                "exact": GradientSpec.exact(), None: GradientSpec.exact()}[gradient]
        result = qng_run(ni.instance, spec, method=name[4:], eta=eta,
                         policy=policy, seed=seed)
    else:
        grad_spec = None
        if gradient is not None:
            grad_spec = {"fd": GradientSpec.fd(), "sp": GradientSpec.sp(),
                         "exact": GradientSpec.exact()}[gradient]
        result = run_optimizer(name, ni.instance, hparams=hparams,
                               gradient_spec=grad_spec, policy=policy, seed=seed,
                               exact=exact_cost)
    if out:
        write_csv(result.records, out, end_marker=True)
    click.echo(f"{name} on {instance_id}: best value {result.best_value:.6f} "
               f"in {result.calls_used} calls (stop: {result.stop_reason})")


@main.command("sweep-gradient")
@click.option("--instance", "instance_id", required=True)
@click.option("--points", type=int, default=100, show_default=True)
@click.option("--out", type=click.Path(), default="sweep.csv", show_default=True)
@click.option("--seed", type=int, default=0)
@click.option("--nshots", type=int, default=None, help="override instance shots")
@click.option("--jobs", type=int, default=1, show_default=True)
def sweep_gradient(instance_id, points, out, seed, nshots, jobs):
    """Finite-difference step-size sweep (999 steps, 0.001 to 0.999)."""
    ni = bench.find_instance(instance_id)
    pts = gradients.sweep_step_size(ni.instance, n_points=points, seed=seed,
                                    nshots=nshots, jobs=jobs)
    gradients.write_sweep_csv(pts, out)
    summary = gradients.sweep_summary(pts)
    click.echo(f"{instance_id}: mean best step {summary['mean_best_eps']:.5f} "
               f"over {summary['n_points']} points -> {out}")


@main.command("sweep-hparams")
@click.option("--optimizer", "name", required=True)
@click.option("--instance", "instance_id", default=None,
              help="default: all four sweeping instances")
@click.option("--trials", type=int, default=1000, show_default=True)
@click.option("--budget", type=int, default=100, show_default=True)
@click.option("--gradient", type=click.Choice(["fd", "sp"]), default="fd")
@click.option("--seed", type=int, default=0)
@click.option("--out", type=click.Path(), default=None, help="JSON output path")
def sweep_hparams(name, instance_id, trials, budget, gradient, seed, out):
    """Random-search hyperparameters on the sweeping instances."""
    if name not in REGISTRY:
        raise click.BadParameter(f"unknown optimizer {name!r}")
    targets = ([bench.find_instance(instance_id)] if instance_id
               else bench.sweeping_instances())
    grad_spec = GradientSpec.fd() if gradient == "fd" else GradientSpec.sp()
    best = {}
    for ni in targets:
        hp, trials_out = bench.sweep_hyperparameters(
            name, ni, trials=trials, eval_budget=budget, seed=seed,
            gradient_spec=grad_spec)
        best[ni.id] = hp
        click.echo(f"{ni.id}: best {hp} ({len(trials_out)} trials)")
    if out:
        with open(out, "w") as fh:
            json.dump(best, fh, indent=2, sort_keys=True)


@main.command("campaign")
@click.option("--benchmarks", default="1,2", show_default=True)
@click.option("--optimizers", "optimizers_opt", default="all", show_default=True,
              help="comma list or 'all'")
@click.option("--seeds", type=int, default=1, show_default=True)
@click.option("--budget", type=int, default=5000, show_default=True)
@click.option("--walltime", type=float, default=3600.0, show_default=True)
@click.option("--master-seed", type=int, default=0, show_default=True)
@click.option("--hparams", "hparams_file", type=click.Path(exists=True), default=None,
              help="JSON of swept sets per optimizer: {optimizer: {set: {...}}}")
@click.option("--out", type=click.Path(), required=True)
@click.option("--jobs", type=int, default=1, show_default=True)
def campaign(benchmarks, optimizers_opt, seeds, budget, walltime, master_seed,
             hparams_file, out, jobs):
    """Run optimizers over benchmark instances, resumably."""
    marks = [int(tok) for tok in benchmarks.split(",") if tok]
    instances = bench.enumerate_instances(tuple(marks))
    names = (list(REGISTRY) if optimizers_opt == "all"
             else [tok for tok in optimizers_opt.split(",") if tok])
    for n in names:
        if n not in REGISTRY:
            raise click.BadParameter(f"unknown optimizer {n!r}")
    hparam_sets = None
    if hparams_file:
        with open(hparams_file) as fh:
            hparam_sets = json.load(fh)
    plan = bench.build_plan(instances, names, hparam_sets=hparam_sets, seeds=seeds)
    policy = TerminationPolicy(max_calls=budget, max_wall_seconds=walltime)
    stats = bench.run_campaign(plan, out, master_seed=master_seed, policy=policy,
                               jobs=jobs)
    click.echo(f"campaign: {stats['executed']} runs executed, "
               f"{stats['skipped']} already complete, outputs in {out}")


@main.command("expressivity")
@click.option("--benchmarks", default="1,2", show_default=True)
@click.option("--budget", type=int, default=5000, show_default=True)
@click.option("--out", type=click.Path(), required=True)
def expressivity(benchmarks, budget, out):
    """Noiseless-cost expressivity check (best exact energy per instance)."""
    marks = [int(tok) for tok in benchmarks.split(",") if tok]
    rows = bench.expressivity_check(bench.enumerate_instances(tuple(marks)),
                                    budget=budget)
    bench.write_expressivity_csv(rows, out)
    click.echo(f"expressivity table -> {out}")


@main.command("analyze")
@click.option("--runs", "runs_dir", type=click.Path(exists=True), required=True)
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option("--tolerances", default="0.1,0.01,0.001", show_default=True)
def analyze(runs_dir, out_dir, tolerances):
    """Summarize a campaign directory into plot-ready tables."""
    tols = tuple(float(tok) for tok in tolerances.split(",") if tok)
    summaries = analysis_mod.summarize_campaign(runs_dir, tolerances=tols)
    if not summaries:
        click.echo("no complete runs found", err=True)
        sys.exit(1)
    paths = analysis_mod.emit_tables(summaries, out_dir, tolerances=tols)
    for name, path in sorted(paths.items()):
        click.echo(f"{name}: {path}")


if __name__ == "__main__":
    main()

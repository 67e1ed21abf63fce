"""Optimizer suite with a uniform run protocol.

Every optimizer is a ``minimize(costfn, x0, hparams, rng, gradient=None,
context=None)`` loop that keeps going until the recording cost function
raises BudgetExhausted (or the method converges internally). ``run`` wires
an optimizer to a recorded cost function on one problem instance and
returns the trace.
"""

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..ansatz import initial_parameters, spec_for
from ..costfn import (
    BudgetExhausted,
    CostRecorder,
    ExactCostRecorder,
    RunRecord,
    TerminationPolicy,
)
from ..gradients import GradientSpec, make_gradient
from ..model import HubbardInstance
from . import coordinate, evolutionary, gradient_based, local, surrogate
from .external import ExternalCommand, ExternalRunFailed
from .external import minimize as _external_minimize


@dataclass(frozen=True)
class HyperRange:
    """Sweep-space declaration for one hyperparameter."""

    kind: str  # "positive-log" | "negative-log" | "unit-interval" | "categorical" | "int-log"
    options: tuple = ()


@dataclass(frozen=True)
class OptimizerInfo:
    name: str
    minimize: Callable
    defaults: dict
    space: dict[str, HyperRange]
    needs_gradient: bool = False
    needs_ansatz: bool = False
    uses_stderr: bool = False


REGISTRY: dict[str, OptimizerInfo] = {}


def _register(info: OptimizerInfo) -> None:
    REGISTRY[info.name] = info


_register(OptimizerInfo(
    "hill_climber", local.hill_climber,
    defaults={"sigma": 0.1, "n": 3},
    space={"sigma": HyperRange("positive-log"), "n": HyperRange("int-log")},
))
_register(OptimizerInfo(
    "coordinate_descent", coordinate.coordinate_descent,
    defaults={"shuffle": False},
    space={"shuffle": HyperRange("categorical", (False, True))},
    needs_ansatz=True,
))
_register(OptimizerInfo(
    "bayes_mgd", surrogate.bayes_mgd,
    defaults={"alpha": 0.602, "gamma": 0.3, "A": 1.0, "delta": 0.6,
              "xi": 0.101, "eta": 0.6, "l0": 0.2},
    space={"alpha": HyperRange("unit-interval"), "gamma": HyperRange("positive-log"),
           "A": HyperRange("positive-log"), "delta": HyperRange("positive-log"),
           "xi": HyperRange("unit-interval"), "eta": HyperRange("positive-log"),
           "l0": HyperRange("positive-log")},
    uses_stderr=True,
))
_register(OptimizerInfo(
    "spsa", gradient_based.spsa,
    defaults={"alpha": 0.602, "gamma": 0.101, "a": 0.2, "c": 0.15, "A": 1.0},
    space={"alpha": HyperRange("unit-interval"), "gamma": HyperRange("unit-interval"),
           "a": HyperRange("positive-log"), "c": HyperRange("positive-log"),
           "A": HyperRange("positive-log")},
))
_register(OptimizerInfo(
    "gd", gradient_based.gd,
    defaults={"eta": 0.01},
    space={"eta": HyperRange("positive-log")},
    needs_gradient=True,
))
_register(OptimizerInfo(
    "momentum", gradient_based.momentum,
    defaults={"eta": 0.01, "gamma": 0.9, "nesterov": False},
    space={"eta": HyperRange("positive-log"), "gamma": HyperRange("unit-interval"),
           "nesterov": HyperRange("categorical", (False, True))},
    needs_gradient=True,
))
_register(OptimizerInfo(
    "adadelta", gradient_based.adadelta,
    defaults={"gamma": 0.9},
    space={"gamma": HyperRange("unit-interval")},
    needs_gradient=True,
))
_register(OptimizerInfo(
    "adam", gradient_based.adam,
    defaults={"alpha": 0.001, "beta1": 0.9, "beta2": 0.999, "nadam": False},
    space={"alpha": HyperRange("positive-log"), "beta1": HyperRange("unit-interval"),
           "beta2": HyperRange("unit-interval"),
           "nadam": HyperRange("categorical", (False, True))},
    needs_gradient=True,
))
_register(OptimizerInfo(
    "mu_plus_lambda", evolutionary.mu_plus_lambda,
    defaults={"min_strat": 0.01, "max_strat": 5.0, "mu": 2, "lambda_factor": 5,
              "alpha": 0.1, "sigma": 0.1, "c": 1.0, "indpb": 0.03,
              "pb_sum": 0.9, "pb_cut": 0.333, "tournsize": 3},
    space={"min_strat": HyperRange("positive-log"), "max_strat": HyperRange("positive-log"),
           "mu": HyperRange("int-log"), "lambda_factor": HyperRange("int-log"),
           "alpha": HyperRange("positive-log"), "sigma": HyperRange("positive-log"),
           "c": HyperRange("positive-log"), "indpb": HyperRange("unit-interval"),
           "pb_sum": HyperRange("unit-interval"), "pb_cut": HyperRange("unit-interval"),
           "tournsize": HyperRange("int-log")},
))
_register(OptimizerInfo(
    "pso", evolutionary.pso,
    defaults={"pop_size": 5, "ind_sigma": 0.1, "smin": -3.0, "smax": 3.0,
              "phi1": 2.0, "phi2": 2.0},
    space={"pop_size": HyperRange("int-log"), "ind_sigma": HyperRange("positive-log"),
           "smin": HyperRange("negative-log"), "smax": HyperRange("positive-log"),
           "phi1": HyperRange("positive-log"), "phi2": HyperRange("positive-log")},
))
_register(OptimizerInfo(
    "cmaes", evolutionary.cmaes,
    defaults={"sigma0": 0.1},
    space={"sigma0": HyperRange("positive-log")},
))
_register(OptimizerInfo(
    "nelder_mead", local.nelder_mead,
    defaults={"adaptive": True, "bounds": True},
    space={"adaptive": HyperRange("categorical", (True, False)),
           "bounds": HyperRange("categorical", (True, False))},
))

GRADIENT_FAMILY = ("gd", "momentum", "adadelta", "adam")


@dataclass
class OptimizerResult:
    optimizer: str
    best_params: np.ndarray
    best_value: float
    records: list[RunRecord]
    calls_used: int
    stop_reason: str  # "budget" | "wall-clock" | "converged" | "failed"
    failure: str | None = None


def result_from_records(name: str, records: list[RunRecord], stop_reason: str,
                        failure: str | None = None) -> OptimizerResult:
    noisy = [(r.value, i) for i, r in enumerate(records) if not np.isnan(r.value)]
    if noisy:
        best_value, idx = min(noisy)
        best_params = np.array(records[idx].params)
    else:
        best_value, best_params = np.nan, np.array([])
    return OptimizerResult(name, best_params, best_value, records, len(records),
                           stop_reason, failure)


def run(
    optimizer_name: str,
    instance: HubbardInstance,
    theta0: np.ndarray | None = None,
    hparams: dict | None = None,
    gradient_spec: GradientSpec | None = None,
    policy: TerminationPolicy = TerminationPolicy(),
    seed: int = 0,
    exact: bool = False,
    exact_shadow: bool = True,
    stream=None,
    external: ExternalCommand | None = None,
    deterministic_time: bool = False,
) -> OptimizerResult:
    """One optimizer run on one instance, every call recorded.

    Optimizers see the statistical cost only (or the exact cost when
    ``exact``). Gradient-family optimizers require a gradient_spec and
    additionally evaluate at the current parameters every 20 iterations.
    """
    if external is None:
        if optimizer_name not in REGISTRY:
            raise ValueError(f"unknown optimizer {optimizer_name!r}")
        info = REGISTRY[optimizer_name]
        if info.needs_gradient and gradient_spec is None:
            raise ValueError(f"{optimizer_name} requires a gradient_spec")
        hp = dict(info.defaults)
        if hparams:
            unknown = set(hparams) - set(info.defaults)
            if unknown:
                raise ValueError(f"unknown hyperparameters for {optimizer_name}: {sorted(unknown)}")
            hp.update(hparams)
    else:
        info = None
        hp = dict(hparams or {})

    spec = spec_for(instance)
    if theta0 is None:
        theta0 = initial_parameters(spec)
    theta0 = np.asarray(theta0, dtype=np.float64)

    recorder_cls = ExactCostRecorder if exact else CostRecorder
    recorder = recorder_cls(instance, policy, seed=seed, exact_shadow=exact_shadow,
                            stream=stream, deterministic_time=deterministic_time)
    rng = np.random.default_rng([seed, 1])
    context = {
        "instance": instance,
        "spec": spec,
        "cost_with_stderr": recorder.call_with_stderr,
    }
    gradient = None
    if gradient_spec is not None:
        grad_cost = (lambda p: recorder(p))
        gradient = make_gradient(gradient_spec, grad_cost, instance, rng)

    stop_reason, failure = "converged", None
    try:
        if external is not None:
            _external_minimize(recorder, theta0, hp, rng, context=context, command=external)
        else:
            if optimizer_name != "nelder_mead":
                # on-trajectory value at the starting point, shared with the
                # optimizer so it is not re-evaluated
                context["initial_value"] = recorder(theta0)
            info.minimize(recorder, theta0, hp, rng, gradient=gradient, context=context)
    except BudgetExhausted as stop:
        stop_reason = stop.reason
    except ExternalRunFailed as exc:
        stop_reason, failure = "failed", str(exc)
    finally:
        recorder.finish()
    return result_from_records(optimizer_name if external is None else "external",
                               recorder.records, stop_reason, failure)

"""Natural gradient and imaginary-time evolution for 1-D chains.

The Fubini-Study metric is approximated by its diagonal. For parameter k
the diagonal entry is the variance of that parameter's group generator in
the circuit prefix state (everything before gate k), scaled by the square
of the gate-angle factor; prefix states cost nothing extra because later
gates at angle zero are the identity. Estimating the whole diagonal takes
exactly nu grouped-measurement calls.
"""

from dataclasses import dataclass

import numpy as np

from .ansatz import (
    gate_angle_scale,
    generator_group,
    prepare_prefix_state,
    spec_for,
)
from .costfn import BudgetExhausted, CostRecorder, TerminationPolicy
from .gradients import GradientSpec, exact_gradient, finite_difference, simultaneous_perturbation
from .model import HubbardInstance
from .optimizers import OptimizerResult, result_from_records
from .statevector import apply_group_generator, sample_group

DEFAULT_ETA = 0.01
DEFAULT_REGULARIZER = 1e-4


class UnsupportedInstanceError(ValueError):
    """QNG methods are restricted to 1-D grids (no FSWAP networks)."""


@dataclass(frozen=True)
class MetricDiagonal:
    """Per-parameter metric entries (QFI F_kk or ITE A_kk >= F_kk)."""

    entries: np.ndarray
    shots: int


def _require_chain(instance: HubbardInstance) -> None:
    grid = instance.grid
    if grid.rows != 1 and grid.cols != 1:
        raise UnsupportedInstanceError(f"{grid} is not a 1-D chain")


def prefix_state(instance: HubbardInstance, params: np.ndarray, k: int):
    """Ansatz state with parameters k.. switched off (the circuit prefix)."""
    _require_chain(instance)
    return prepare_prefix_state(instance, params, k)


def _group_moments_exact(instance, params, k) -> tuple[float, float]:
    """(variance, mean) of parameter k's generator in its prefix state."""
    spec = spec_for(instance)
    group = generator_group(spec, k)
    state = prefix_state(instance, params, k)
    g_amps = apply_group_generator(state.amps, group)
    mean = float(np.real(np.vdot(state.amps, g_amps)))
    second = float(np.real(np.vdot(g_amps, g_amps)))
    return second - mean * mean, mean


def exact_qfi_diagonal(instance: HubbardInstance, params: np.ndarray) -> MetricDiagonal:
    spec = spec_for(instance)
    entries = np.empty(spec.nparams)
    for k in range(spec.nparams):
        scale = gate_angle_scale(generator_group(spec, k))
        var, _ = _group_moments_exact(instance, params, k)
        entries[k] = scale * scale * var
    return MetricDiagonal(entries, 0)


def exact_ite_metric_diagonal(instance: HubbardInstance, params: np.ndarray) -> MetricDiagonal:
    spec = spec_for(instance)
    entries = np.empty(spec.nparams)
    for k in range(spec.nparams):
        scale = gate_angle_scale(generator_group(spec, k))
        var, mean = _group_moments_exact(instance, params, k)
        entries[k] = scale * scale * (var + mean * mean)
    return MetricDiagonal(entries, 0)


def _sampled_metric(instance, params, nshots, rng, second_moment: bool) -> MetricDiagonal:
    _require_chain(instance)
    spec = spec_for(instance)
    entries = np.empty(spec.nparams)
    for k in range(spec.nparams):
        group = generator_group(spec, k)
        scale = gate_angle_scale(group)
        batch = sample_group(prefix_state(instance, params, k), group, nshots, rng)
        moment = batch.second_moment() if second_moment else batch.variance()
        entries[k] = max(scale * scale * moment, 0.0)
    return MetricDiagonal(entries, nshots)


def qfi_diagonal(
    instance: HubbardInstance, params: np.ndarray, nshots: int, rng: np.random.Generator
) -> MetricDiagonal:
    """Sampled diagonal QFI: one grouped measurement per parameter."""
    return _sampled_metric(instance, params, nshots, rng, second_moment=False)


def ite_metric_diagonal(
    instance: HubbardInstance, params: np.ndarray, nshots: int, rng: np.random.Generator
) -> MetricDiagonal:
    """Sampled ITE metric: variance plus squared mean (the second moment)."""
    return _sampled_metric(instance, params, nshots, rng, second_moment=True)


def natural_step(
    theta: np.ndarray,
    grad: np.ndarray,
    metric: MetricDiagonal,
    eta: float = DEFAULT_ETA,
    regularizer: float = DEFAULT_REGULARIZER,
) -> np.ndarray:
    """theta - eta * F^-1 grad with the diagonal floored at the regularizer."""
    theta = np.asarray(theta, dtype=np.float64)
    grad = np.asarray(grad, dtype=np.float64)
    if theta.shape != grad.shape or theta.shape != metric.entries.shape:
        raise ValueError("theta, gradient and metric lengths differ")
    return theta - eta * grad / np.maximum(metric.entries, regularizer)


def ite_step(
    theta: np.ndarray,
    grad: np.ndarray,
    metric: MetricDiagonal,
    eta: float = DEFAULT_ETA,
    regularizer: float = DEFAULT_REGULARIZER,
) -> np.ndarray:
    """Imaginary-time update: identical form with the second-moment metric."""
    return natural_step(theta, grad, metric, eta, regularizer)


def qng_run(
    instance: HubbardInstance,
    gradient_spec: GradientSpec,
    method: str = "nat",
    eta: float = DEFAULT_ETA,
    policy: TerminationPolicy = TerminationPolicy(),
    seed: int = 0,
    theta0: np.ndarray | None = None,
    regularizer: float = DEFAULT_REGULARIZER,
    exact_shadow: bool = True,
    stream=None,
) -> OptimizerResult:
    """GD / NAT / ITE loop with full call accounting.

    Each iteration evaluates once at the current parameters, estimates the
    gradient (exact: free; fd: 2*nu; sp: 2 calls), and for nat/ite spends
    nu further calls estimating the metric diagonal at the instance's shot
    count. The trace carries the iteration index alongside the call counter.
    """
    if method not in ("gd", "nat", "ite"):
        raise ValueError(f"unknown method {method!r}")
    if method != "gd":
        _require_chain(instance)
    spec = spec_for(instance)
    if theta0 is None:
        from .ansatz import initial_parameters

        theta0 = initial_parameters(spec)
    theta = np.asarray(theta0, dtype=np.float64).copy()
    recorder = CostRecorder(instance, policy, seed=seed, exact_shadow=exact_shadow,
                            stream=stream, qng_style=True)
    rng = np.random.default_rng([seed, 2])
    nu = spec.nparams

    def grad_at(t: np.ndarray) -> np.ndarray:
        if gradient_spec.kind == "exact":
            return exact_gradient(instance, t)
        if gradient_spec.kind == "finite_difference":
            return finite_difference(recorder, t, gradient_spec.step)
        return simultaneous_perturbation(recorder, t, gradient_spec.step, rng)

    stop_reason = "converged"
    try:
        iteration = 1
        while True:
            recorder.set_iteration(iteration)
            recorder(theta)
            grad = grad_at(theta)
            if method == "gd":
                theta = theta - eta * grad
            else:
                entries = np.empty(nu)
                for k in range(nu):
                    group = generator_group(spec, k)
                    scale = gate_angle_scale(group)
                    recorder.record_metric_call(theta, instance.nshots)
                    batch = sample_group(prefix_state(instance, theta, k), group,
                                         instance.nshots, rng)
                    moment = (batch.second_moment() if method == "ite"
                              else batch.variance())
                    entries[k] = max(scale * scale * moment, 0.0)
                metric = MetricDiagonal(entries, instance.nshots)
                theta = natural_step(theta, grad, metric, eta, regularizer)
            iteration += 1
    except BudgetExhausted as stop:
        stop_reason = stop.reason
    finally:
        recorder.finish()
    return result_from_records(f"qng-{method}", recorder.records, stop_reason)

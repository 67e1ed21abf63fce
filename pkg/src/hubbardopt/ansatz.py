"""Hamiltonian-variational ansatz: parameter vector -> prepared state.

Each layer applies the grouped evolutions in the fixed order O, H1, V1,
H2, V2 (absent groups skipped), one shared angle per group per layer.
Parameters are layer-major: all of layer 1 first.

Gate convention (pinned by the published iteration-1 energy of the 3x1
benchmark trace): an onsite group at angle t applies exp(i*t*|11><11|) per
site, while a hopping group applies Givens-style rotations of -t/2 per
bond, i.e. exp(-i(t/2) * (XX+YY)/2 * Zstring). Onsite parameters are
therefore 2pi-periodic and hopping parameters 4pi-periodic; the energy
along a hopping coordinate is a trigonometric polynomial in t/2.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import kernels
from .model import GridSpec, HubbardInstance, TermGroup, _string_mask, build_groups, initial_state
from .statevector import StateVector

ONSITE_ANGLE_SCALE = 1.0
HOPPING_ANGLE_SCALE = -0.5


def gate_angle_scale(group: TermGroup) -> float:
    return ONSITE_ANGLE_SCALE if group.coefficient_role == "U" else HOPPING_ANGLE_SCALE


@dataclass(frozen=True)
class AnsatzSpec:
    grid: GridSpec
    nlayers: int
    groups: tuple[TermGroup, ...]

    @property
    def params_per_layer(self) -> int:
        return len(self.groups)

    @property
    def nparams(self) -> int:
        return self.nlayers * len(self.groups)

    @property
    def layer_group_order(self) -> tuple[str, ...]:
        return tuple(g.label for g in self.groups)


@lru_cache(maxsize=None)
def ansatz_spec(grid: GridSpec, nlayers: int) -> AnsatzSpec:
    return AnsatzSpec(grid, nlayers, tuple(build_groups(grid)))


@dataclass(frozen=True)
class GatePlan:
    """Flattened gate table for the fused circuit kernel."""

    kinds: np.ndarray
    js: np.ndarray
    ks: np.ndarray
    smasks: np.ndarray
    param_index: np.ndarray
    scales: np.ndarray
    param_gate_starts: np.ndarray  # first gate of each parameter, plus end

    def angles(self, params: np.ndarray) -> np.ndarray:
        return self.scales * params[self.param_index]


@lru_cache(maxsize=None)
def gate_plan(grid: GridSpec, nlayers: int) -> GatePlan:
    spec = ansatz_spec(grid, nlayers)
    kinds, js, ks, smasks, pidx, scales, starts = [], [], [], [], [], [], []
    p = 0
    for _ in range(nlayers):
        for group in spec.groups:
            starts.append(len(kinds))
            scale = gate_angle_scale(group)
            for term in group.terms:
                kinds.append(kernels.ONSITE if term.kind == "onsite" else kernels.HOPPING)
                js.append(term.pair[0])
                ks.append(term.pair[1])
                smasks.append(_string_mask(*term.pair) if term.kind == "hopping" else 0)
                pidx.append(p)
                scales.append(scale)
            p += 1
    starts.append(len(kinds))
    return GatePlan(
        np.array(kinds, dtype=np.int8),
        np.array(js, dtype=np.int32),
        np.array(ks, dtype=np.int32),
        np.array(smasks, dtype=np.int64),
        np.array(pidx, dtype=np.int32),
        np.array(scales),
        np.array(starts, dtype=np.int64),
    )


def spec_for(instance: HubbardInstance) -> AnsatzSpec:
    return ansatz_spec(instance.grid, instance.nlayers)


def initial_parameters(spec: AnsatzSpec) -> np.ndarray:
    """Every angle starts at 1/nlayers."""
    return np.full(spec.nparams, 1.0 / spec.nlayers)


@lru_cache(maxsize=32)
def _initial_amps(instance: HubbardInstance) -> np.ndarray:
    amps = initial_state(instance)
    amps.setflags(write=False)
    return amps


def _check_params(spec: AnsatzSpec, params: np.ndarray) -> np.ndarray:
    params = np.asarray(params, dtype=np.float64)
    if params.shape != (spec.nparams,):
        raise ValueError(f"expected {spec.nparams} parameters, got shape {params.shape}")
    return params


def prepare_state(instance: HubbardInstance, params: np.ndarray) -> StateVector:
    """Reference state followed by the layered group evolutions."""
    spec = spec_for(instance)
    params = _check_params(spec, params)
    plan = gate_plan(instance.grid, instance.nlayers)
    state = StateVector(_initial_amps(instance).copy())
    kernels.apply_circuit(state.amps, plan.kinds, plan.js, plan.ks, plan.smasks,
                          plan.angles(params))
    return state


def prepare_prefix_state(instance: HubbardInstance, params: np.ndarray, k: int) -> StateVector:
    """State after the first k parameterized group evolutions.

    Equal to the full circuit with parameters k.. set to zero, since
    zero-angle evolutions are the identity.
    """
    spec = spec_for(instance)
    params = _check_params(spec, params)
    if not 0 <= k <= spec.nparams:
        raise ValueError(f"prefix length {k} outside [0, {spec.nparams}]")
    plan = gate_plan(instance.grid, instance.nlayers)
    end = int(plan.param_gate_starts[k])
    state = StateVector(_initial_amps(instance).copy())
    kernels.apply_circuit(state.amps, plan.kinds[:end], plan.js[:end], plan.ks[:end],
                          plan.smasks[:end], plan.angles(params)[:end])
    return state


def generator_group(spec: AnsatzSpec, param_index: int) -> TermGroup:
    if not 0 <= param_index < spec.nparams:
        raise ValueError(f"parameter index {param_index} outside [0, {spec.nparams})")
    return spec.groups[param_index % len(spec.groups)]


def parameter_period(spec: AnsatzSpec, param_index: int) -> float:
    """Exact period of the energy in one coordinate (2pi onsite, 4pi hopping)."""
    group = generator_group(spec, param_index)
    return 2.0 * np.pi if group.coefficient_role == "U" else 4.0 * np.pi


def generator_spec(spec: AnsatzSpec, param_index: int) -> tuple[str, tuple, int]:
    """(group label, terms, trig degree) of one parameter's generator.

    The degree counts harmonics of the coordinate's base frequency
    (2pi / period): the term count for an onsite group, twice the gate
    count for a hopping group. 2*degree+1 equally spaced samples over one
    period interpolate the slice exactly.
    """
    group = generator_group(spec, param_index)
    if group.coefficient_role == "U":
        degree = len(group.terms)
    else:
        degree = 2 * len(group.terms)
    return group.label, group.terms, degree

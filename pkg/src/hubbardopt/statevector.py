"""Dense state-vector engine: ansatz gate primitives and grouped measurement.

All gates mutate the state in place. Measurement of a hopping group first
rotates each pair so the (|01> +- |10>)/sqrt(2) eigenstates become basis
states, then samples full-register bitstrings from the rotated distribution.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .model import FermionicTerm, TermGroup, HubbardParams, _string_mask


class StateVector:
    """2^q complex amplitudes; bit k of the index is qubit k."""

    __slots__ = ("amps",)

    def __init__(self, amps: np.ndarray):
        self.amps = np.ascontiguousarray(amps, dtype=np.complex128)

    @classmethod
    def computational_basis(cls, nqubits: int, index: int = 0) -> "StateVector":
        amps = np.zeros(1 << nqubits, dtype=np.complex128)
        amps[index] = 1.0
        return cls(amps)

    @property
    def qubit_count(self) -> int:
        return int(self.amps.size).bit_length() - 1

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def copy(self) -> "StateVector":
        return StateVector(self.amps.copy())


def apply_onsite_phase(state: StateVector, pair: tuple[int, int], theta: float) -> StateVector:
    """exp(i theta |11><11|) on the pair: phase on both-occupied basis states."""
    j, k = pair
    if j == k:
        raise ValueError("onsite pair must name two distinct qubits")
    mask = (1 << j) | (1 << k)
    kernels.onsite_phase(state.amps, mask, math.cos(theta), math.sin(theta))
    return state


def apply_hopping_evolution(
    state: StateVector, pair: tuple[int, int], z_string: tuple[int, ...], theta: float
) -> StateVector:
    """exp(i theta/2 (XX+YY) Z_string): a rotation within each |01>,|10> pair.

    The Z string contributes only a sign s = parity of the string bits, so
    the 2x2 block is [[cos t, i s sin t], [i s sin t, cos t]].
    """
    j, k = pair
    smask = 0
    for z in z_string:
        if not j < z < k:
            raise ValueError(f"Z-string qubit {z} outside pair {pair}")
        smask |= 1 << z
    kernels.hopping_rotation(state.amps, j, k, smask, math.cos(theta), math.sin(theta))
    return state


def apply_fswap(state: StateVector, pair: tuple[int, int]) -> StateVector:
    """Fermionic swap: exchange the pair's modes, -1 phase on |11>."""
    j, k = pair
    kernels.fswap(state.amps, j, k)
    return state


def apply_term_evolution(state: StateVector, term: FermionicTerm, theta: float) -> StateVector:
    if term.kind == "onsite":
        return apply_onsite_phase(state, term.pair, theta)
    return apply_hopping_evolution(state, term.pair, term.z_string, theta)


def apply_group_evolution(state: StateVector, group: TermGroup, theta: float) -> StateVector:
    """Shared-angle evolution of all terms in a group (they commute)."""
    for term in group.terms:
        apply_term_evolution(state, term, theta)
    return state


def apply_group_generator(amps: np.ndarray, group: TermGroup) -> np.ndarray:
    """G|psi> for the group's generator G (sum of terms). Not unitary."""
    out = np.zeros_like(amps)
    nbits = int(amps.size).bit_length() - 1
    idx = np.arange(amps.size, dtype=np.int64)
    for term in group.terms:
        j, k = term.pair
        if term.kind == "onsite":
            sel = (idx & ((1 << j) | (1 << k))) == ((1 << j) | (1 << k))
            out[sel] += amps[sel]
        else:
            from ._kernels_py import _pair_indices

            i01, i10, sign = _pair_indices(nbits, j, k, _string_mask(j, k))
            out[i01] += sign * amps[i10]
            out[i10] += sign * amps[i01]
    return out


def exact_group_expectation(state: StateVector, group: TermGroup) -> float:
    total = 0.0
    for term in group.terms:
        j, k = term.pair
        if term.kind == "onsite":
            total += kernels.expect_onsite(state.amps, (1 << j) | (1 << k))
        else:
            total += kernels.expect_hopping(state.amps, j, k, _string_mask(j, k))
    return total


def exact_expectation(state: StateVector, groups: list[TermGroup], params: HubbardParams) -> float:
    """<psi|H|psi> summed over groups, no sampling."""
    energy = 0.0
    for group in groups:
        coeff = params.u if group.coefficient_role == "U" else params.t
        energy += coeff * exact_group_expectation(state, group)
    return energy


@dataclass
class ShotBatch:
    """Sampled measurement of one group.

    Outcomes are the distinct post-rotation bitstrings observed, with
    multiplicities; ``values`` expands to the per-shot group values.
    """

    group_label: str
    nshots: int
    outcomes: np.ndarray
    counts: np.ndarray
    outcome_values: np.ndarray

    @property
    def values(self) -> np.ndarray:
        return np.repeat(self.outcome_values, self.counts)

    def mean(self) -> float:
        return float(self.outcome_values @ self.counts) / self.nshots

    def variance(self, ddof: int = 1) -> float:
        """Sample variance of the per-shot group values."""
        if self.nshots <= ddof:
            return 0.0
        m = self.mean()
        ss = float(((self.outcome_values - m) ** 2) @ self.counts)
        return ss / (self.nshots - ddof)

    def second_moment(self) -> float:
        """Mean squared per-shot value (unbiased for <G^2>)."""
        return float((self.outcome_values ** 2) @ self.counts) / self.nshots


def group_values_for(group: TermGroup, outcomes: np.ndarray) -> np.ndarray:
    """Per-outcome group value in the post-rotation basis.

    Hopping terms read +1 for pair bits (0,1), -1 for (1,0), 0 otherwise,
    times the Z-string bit parity; onsite terms read the AND of their bits.
    """
    vals = np.zeros(outcomes.size)
    for term in group.terms:
        j, k = term.pair
        bj = (outcomes >> j) & 1
        bk = (outcomes >> k) & 1
        if term.kind == "onsite":
            vals += bj & bk
        else:
            v = (bk - bj).astype(np.float64)
            smask = _string_mask(j, k)
            if smask:
                par = outcomes & smask
                for shift in (32, 16, 8, 4, 2, 1):
                    par = par ^ (par >> shift)
                v *= 1.0 - 2.0 * (par & 1)
            vals += v
    return vals


def sample_group(
    state: StateVector, group: TermGroup, nshots: int, rng: np.random.Generator
) -> ShotBatch:
    """Simulate nshots projective measurements of one group.

    The state is copied, each hopping pair is rotated to the measurement
    basis, and outcome multiplicities are drawn multinomially from the
    resulting distribution (equal in law to independent shots).
    """
    if nshots < 1:
        raise ValueError("nshots must be >= 1")
    scratch = state.amps.copy()
    for term in group.terms:
        if term.kind == "hopping":
            kernels.pair_hadamard(scratch, *term.pair)
    probs = np.abs(scratch) ** 2
    probs /= probs.sum()
    counts = rng.multinomial(nshots, probs)
    outcomes = np.flatnonzero(counts).astype(np.int64)
    counts = counts[outcomes]
    return ShotBatch(group.label, nshots, outcomes, counts, group_values_for(group, outcomes))

"""Shared fixtures and independent dense oracles.

The oracles here build operators from explicit Jordan-Wigner
creation/annihilation matrices via Kronecker products, deliberately
sharing no code with the package's bit-rule constructions.
"""

from functools import reduce

import numpy as np
import pytest

from hubbardopt.model import (
    GridSpec,
    HubbardInstance,
    HubbardParams,
    Occupation,
    occupation_for,
    snake_qubit_index,
)

I2 = np.eye(2)
Z = np.diag([1.0, -1.0])
LOWER = np.array([[0.0, 1.0], [0.0, 0.0]])  # |0><1|


def kron_chain(ops):
    """ops[i] acts on qubit i (bit i of the basis index)."""
    return reduce(np.kron, reversed(list(ops)))


def annihilation_op(mode: int, nmodes: int) -> np.ndarray:
    """JW-mapped fermionic annihilation operator a_mode."""
    ops = []
    for q in range(nmodes):
        if q < mode:
            ops.append(Z)
        elif q == mode:
            ops.append(LOWER)
        else:
            ops.append(I2)
    return kron_chain(ops)


def brute_force_hamiltonian(grid: GridSpec, params: HubbardParams) -> np.ndarray:
    """Second-quantized Hubbard Hamiltonian from explicit ladder operators."""
    n = grid.qubits
    a = [annihilation_op(m, n) for m in range(n)]
    h = np.zeros((1 << n, 1 << n))

    def mode(r, c, spin):
        return snake_qubit_index(r, c, spin, grid)

    bonds = []
    for r in range(grid.rows):
        for c in range(grid.cols):
            if c + 1 < grid.cols:
                bonds.append(((r, c), (r, c + 1)))
            if r + 1 < grid.rows:
                bonds.append(((r, c), (r + 1, c)))
    for (r1, c1), (r2, c2) in bonds:
        for spin in ("up", "down"):
            j, k = mode(r1, c1, spin), mode(r2, c2, spin)
            h += params.t * (a[j].T @ a[k] + a[k].T @ a[j])
    for r in range(grid.rows):
        for c in range(grid.cols):
            up, dn = mode(r, c, "up"), mode(r, c, "down")
            h += params.u * (a[up].T @ a[up]) @ (a[dn].T @ a[dn])
    return h


def single_qubit_embed(op: np.ndarray, qubit: int, nqubits: int) -> np.ndarray:
    ops = [I2] * nqubits
    ops[qubit] = op
    return kron_chain(ops)


def random_state(nqubits: int, rng: np.random.Generator) -> np.ndarray:
    amps = rng.normal(size=1 << nqubits) + 1j * rng.normal(size=1 << nqubits)
    return amps / np.linalg.norm(amps)


def make_instance(rows, cols, u=4.0, filling="half", layers=2, shots=1000):
    grid = GridSpec(rows, cols)
    return HubbardInstance(grid, HubbardParams(u=u), occupation_for(filling, grid),
                           layers, shots)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def sweep31():
    """The 3x1 sweeping instance behind the published trace values."""
    return make_instance(3, 1, u=4.0, filling="quarter", layers=2, shots=1000)


def pytest_addoption(parser):
    parser.addoption("--skip-slow", action="store_true", default=False,
                     help="skip the long-running acceptance criteria")


def pytest_collection_modifyitems(config, items):
    if not config.getoption("--skip-slow"):
        return
    marker = pytest.mark.skip(reason="--skip-slow given")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(marker)

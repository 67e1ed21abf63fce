"""Fermi-Hubbard model on a rectangular grid, mapped to qubits.

Sites live on an ``rows x cols`` open-boundary lattice. Each site carries a
spin-up and a spin-down fermionic mode; modes are encoded into qubits with
spin-up modes first (indices ``[0, sites)``) followed by spin-down, each
sector in snake order over the grid. Basis states are integers whose bit k
gives the occupation of qubit k.
"""

import threading
from dataclasses import dataclass
from itertools import combinations

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

DEFAULT_QUBIT_CAP = 18

# sector dimension above which the ground-state solve switches to Lanczos
DENSE_SECTOR_LIMIT = 2048

GROUP_ORDER = ("O", "H1", "V1", "H2", "V2")


class ResourceLimitError(RuntimeError):
    """Raised when an instance exceeds the configured qubit cap."""


@dataclass(frozen=True)
class GridSpec:
    """Rectangular lattice, ``rows x cols`` sites."""

    rows: int
    cols: int

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError(f"grid dimensions must be >= 1, got {self.rows}x{self.cols}")

    @property
    def sites(self) -> int:
        return self.rows * self.cols

    @property
    def qubits(self) -> int:
        return 2 * self.sites

    def __str__(self):
        return f"{self.rows}x{self.cols}"


@dataclass(frozen=True)
class HubbardParams:
    """Hamiltonian coefficients; t is -1 throughout the benchmark set."""

    u: float
    t: float = -1.0


@dataclass(frozen=True)
class Occupation:
    n_up: int
    n_down: int

    def __post_init__(self):
        if self.n_up < 0 or self.n_down < 0:
            raise ValueError("occupation numbers must be non-negative")

    @property
    def total(self) -> int:
        return self.n_up + self.n_down


@dataclass(frozen=True)
class FermionicTerm:
    """One JW-mapped Hamiltonian term.

    Hopping: (1/2)(X_j X_k + Y_j Y_k) Z_{j+1}..Z_{k-1} acting on the qubit
    pair (j, k) with the given Z string. Onsite: |11><11| on (j, k).
    """

    kind: str  # "hopping" | "onsite"
    pair: tuple[int, int]
    z_string: tuple[int, ...] = ()
    coefficient_role: str = "t"

    def __post_init__(self):
        j, k = self.pair
        if not j < k:
            raise ValueError(f"term pair must be ordered, got {self.pair}")
        if self.kind == "onsite" and self.z_string:
            raise ValueError("onsite terms carry no Z string")


@dataclass(frozen=True)
class TermGroup:
    """A set of commuting terms measurable in one setting."""

    label: str
    terms: tuple[FermionicTerm, ...]

    @property
    def coefficient_role(self) -> str:
        return self.terms[0].coefficient_role


@dataclass(frozen=True)
class HubbardInstance:
    """One benchmark problem: grid, couplings, filling, depth, shot count."""

    grid: GridSpec
    params: HubbardParams
    occupation: Occupation
    nlayers: int
    nshots: int

    def __post_init__(self):
        if self.nlayers < 1:
            raise ValueError("nlayers must be >= 1")
        if self.nshots < 1:
            raise ValueError("nshots must be >= 1")
        if self.occupation.n_up > self.grid.sites or self.occupation.n_down > self.grid.sites:
            raise ValueError("occupation exceeds grid capacity")


def snake_qubit_index(row: int, col: int, spin: str, grid: GridSpec) -> int:
    """Qubit index of (site, spin) under the snake ordering.

    Even rows run left to right, odd rows right to left; spin-down modes
    are offset by the site count.
    """
    if not (0 <= row < grid.rows and 0 <= col < grid.cols):
        raise ValueError(f"site ({row},{col}) outside {grid} grid")
    if spin not in ("up", "down"):
        raise ValueError(f"spin must be 'up' or 'down', got {spin!r}")
    c = col if row % 2 == 0 else grid.cols - 1 - col
    site = row * grid.cols + c
    return site + (grid.sites if spin == "down" else 0)


def _hopping_term(j: int, k: int) -> FermionicTerm:
    j, k = min(j, k), max(j, k)
    return FermionicTerm("hopping", (j, k), tuple(range(j + 1, k)), "t")


def build_groups(grid: GridSpec) -> list[TermGroup]:
    """The nonempty measurement groups among O, H1, V1, H2, V2.

    O holds one onsite term per site. H1/H2 hold the hopping terms across
    odd/even column gaps, V1/V2 across odd/even row gaps, each for both
    spin sectors. Pairs within a group are disjoint; snake-adjacent pairs
    carry no Z string.
    """
    onsite = []
    for r in range(grid.rows):
        for c in range(grid.cols):
            up = snake_qubit_index(r, c, "up", grid)
            onsite.append(FermionicTerm("onsite", (up, up + grid.sites), (), "U"))
    onsite.sort(key=lambda t: t.pair)

    horiz: dict[str, list[FermionicTerm]] = {"H1": [], "H2": []}
    for gap in range(grid.cols - 1):
        label = "H1" if gap % 2 == 0 else "H2"
        for r in range(grid.rows):
            for spin in ("up", "down"):
                horiz[label].append(
                    _hopping_term(
                        snake_qubit_index(r, gap, spin, grid),
                        snake_qubit_index(r, gap + 1, spin, grid),
                    )
                )

    vert: dict[str, list[FermionicTerm]] = {"V1": [], "V2": []}
    for gap in range(grid.rows - 1):
        label = "V1" if gap % 2 == 0 else "V2"
        for c in range(grid.cols):
            for spin in ("up", "down"):
                vert[label].append(
                    _hopping_term(
                        snake_qubit_index(gap, c, spin, grid),
                        snake_qubit_index(gap + 1, c, spin, grid),
                    )
                )

    by_label = {"O": onsite, **horiz, **vert}
    groups = []
    for label in GROUP_ORDER:
        terms = sorted(by_label[label], key=lambda t: t.pair)
        if terms:
            groups.append(TermGroup(label, tuple(terms)))
    return groups


def params_per_layer(grid: GridSpec) -> int:
    return 1 + min(2, grid.rows - 1) + min(2, grid.cols - 1)


def gate_count_table(grid: GridSpec) -> dict:
    """Published per-group gate counts, normalized to the m >= n orientation.

    Note the O row counts 2mn (qubits touched), not the mn onsite gates the
    generator actually emits.
    """
    m, n = max(grid.rows, grid.cols), min(grid.rows, grid.cols)
    return {
        "params_per_layer": 1 + min(2, m - 1) + min(2, n - 1),
        "O": 2 * m * n,
        "H1": 2 * n * ((m - 1 + 1) // 2),
        "H2": 2 * n * ((m - 1) // 2),
        "V1": 2 * m * ((n - 1 + 1) // 2),
        "V2": 2 * m * ((n - 1) // 2),
    }


def half_filling(grid: GridSpec) -> Occupation:
    k = grid.sites // 2
    return Occupation(k, k)


def quarter_filling(grid: GridSpec) -> Occupation:
    k = max(1, grid.sites // 4)
    return Occupation(k, k)


def occupation_for(filling: str, grid: GridSpec) -> Occupation:
    if filling == "half":
        return half_filling(grid)
    if filling == "quarter":
        return quarter_filling(grid)
    raise ValueError(f"unknown filling {filling!r}")


# ---------------------------------------------------------------------------
# Sector-restricted Hamiltonian and exact diagonalization


def _combinations_bits(nmodes: int, nocc: int) -> list[int]:
    return sorted(sum(1 << p for p in occ) for occ in combinations(range(nmodes), nocc))


def sector_basis(grid: GridSpec, occupation: Occupation) -> np.ndarray:
    """All basis integers with the given (n_up, n_down), ascending."""
    mn = grid.sites
    ups = _combinations_bits(mn, occupation.n_up)
    downs = _combinations_bits(mn, occupation.n_down)
    states = [(d << mn) | u for d in downs for u in ups]
    return np.array(sorted(states), dtype=np.int64)


def _string_mask(j: int, k: int) -> int:
    return ((1 << k) - 1) & ~((1 << (j + 1)) - 1)


def sector_hamiltonian(
    grid: GridSpec, params: HubbardParams, occupation: Occupation
) -> tuple[scipy.sparse.csr_matrix, np.ndarray]:
    """Hamiltonian restricted to the fixed-occupation sector.

    Built directly from occupation-basis bit rules: a hop j<->k flips the
    two bits and picks up the parity of occupied modes strictly between
    them. Returns (matrix, basis integers).
    """
    basis = sector_basis(grid, occupation)
    pos = {int(s): i for i, s in enumerate(basis)}
    hops = []
    onsites = []
    for group in build_groups(grid):
        for term in group.terms:
            if term.kind == "onsite":
                onsites.append(term.pair)
            else:
                j, k = term.pair
                hops.append((j, k, _string_mask(j, k)))

    rows, cols, vals = [], [], []
    for i, s in enumerate(basis):
        s = int(s)
        diag = 0.0
        for j, k in onsites:
            if s >> j & 1 and s >> k & 1:
                diag += params.u
        if diag:
            rows.append(i)
            cols.append(i)
            vals.append(diag)
        for j, k, mask in hops:
            if (s >> j & 1) != (s >> k & 1):
                sign = -1.0 if bin(s & mask).count("1") % 2 else 1.0
                t = pos[s ^ (1 << j) ^ (1 << k)]
                rows.append(t)
                cols.append(i)
                vals.append(params.t * sign)
    dim = len(basis)
    mat = scipy.sparse.csr_matrix((vals, (rows, cols)), shape=(dim, dim))
    return mat, basis


def _sector_ground(
    grid: GridSpec, params: HubbardParams, occupation: Occupation
) -> tuple[float, np.ndarray, np.ndarray]:
    """Lowest eigenpair of the sector Hamiltonian (energy, vector, basis)."""
    mat, basis = sector_hamiltonian(grid, params, occupation)
    dim = mat.shape[0]
    if dim == 0:
        raise ValueError(f"empty sector {occupation} on {grid}")
    if dim == 1:
        return float(mat[0, 0].real), np.ones(1), basis
    if dim <= DENSE_SECTOR_LIMIT:
        w, v = scipy.linalg.eigh(mat.toarray())
        return float(w[0]), v[:, 0], basis
    v0 = np.full(dim, 1.0 / np.sqrt(dim))
    w, v = scipy.sparse.linalg.eigsh(mat, k=1, which="SA", v0=v0)
    return float(w[0]), v[:, 0], basis


_ground_cache: dict = {}
_ground_lock = threading.Lock()


def exact_ground_energy(instance: HubbardInstance, qubit_cap: int = DEFAULT_QUBIT_CAP) -> float:
    """Ground energy in the instance's occupation sector, cached per problem."""
    grid = instance.grid
    if grid.qubits > qubit_cap:
        raise ResourceLimitError(f"{grid} needs {grid.qubits} qubits, cap is {qubit_cap}")
    key = (grid.rows, grid.cols, instance.params.t, instance.params.u,
           instance.occupation.n_up, instance.occupation.n_down)
    with _ground_lock:
        if key in _ground_cache:
            return _ground_cache[key]
    if instance.occupation.total == 0:
        energy = 0.0
    else:
        energy, _, _ = _sector_ground(grid, instance.params, instance.occupation)
    with _ground_lock:
        _ground_cache[key] = energy
    return energy


def initial_state(instance: HubbardInstance) -> np.ndarray:
    """Ansatz reference state: U=0 ground state of the occupation sector.

    The hopping-only Hamiltonian is diagonalized in the sector; the lowest
    eigenvector is embedded in the full register with its largest-magnitude
    amplitude rotated to the real positive axis.
    """
    grid = instance.grid
    if grid.qubits > DEFAULT_QUBIT_CAP:
        raise ResourceLimitError(f"{grid} needs {grid.qubits} qubits")
    amps = np.zeros(1 << grid.qubits, dtype=np.complex128)
    if instance.occupation.total == 0:
        amps[0] = 1.0
        return amps
    free = HubbardParams(u=0.0, t=instance.params.t)
    _, vec, basis = _sector_ground(grid, free, instance.occupation)
    top = int(np.argmax(np.abs(vec)))
    if vec[top] < 0:
        vec = -vec
    amps[basis] = vec
    return amps


# ---------------------------------------------------------------------------
# Dense assembly from term groups (small systems: oracles and cross-checks)


def term_matrix(term: FermionicTerm, nqubits: int) -> np.ndarray:
    """Dense matrix of one JW term over the full register (float64)."""
    dim = 1 << nqubits
    mat = np.zeros((dim, dim))
    j, k = term.pair
    if term.kind == "onsite":
        for s in range(dim):
            if s >> j & 1 and s >> k & 1:
                mat[s, s] = 1.0
        return mat
    mask = _string_mask(j, k)
    for s in range(dim):
        if (s >> j & 1) != (s >> k & 1):
            sign = -1.0 if bin(s & mask).count("1") % 2 else 1.0
            mat[s ^ (1 << j) ^ (1 << k), s] = sign
    return mat


def group_generator_matrix(group: TermGroup, nqubits: int) -> np.ndarray:
    """Dense generator of a group's shared-angle evolution (sum of terms)."""
    out = np.zeros((1 << nqubits, 1 << nqubits))
    for term in group.terms:
        out += term_matrix(term, nqubits)
    return out


def dense_hamiltonian(grid: GridSpec, params: HubbardParams, max_qubits: int = 14) -> np.ndarray:
    """Full Hamiltonian assembled from the term groups. Small grids only."""
    if grid.qubits > max_qubits:
        raise ResourceLimitError(f"dense assembly capped at {max_qubits} qubits")
    dim = 1 << grid.qubits
    out = np.zeros((dim, dim))
    for group in build_groups(grid):
        coeff = params.u if group.coefficient_role == "U" else params.t
        out += coeff * group_generator_matrix(group, grid.qubits)
    return out

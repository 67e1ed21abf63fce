"""Pure-numpy state-vector kernels (fallback backend).

Same call surface as the compiled module. Index arrays for each (qubit
pair, Z string) are cached, so repeated gate applications on one geometry
pay the selection cost once.
"""

import numpy as np

_SQRT_HALF = 1.0 / np.sqrt(2.0)

_pair_cache: dict = {}
_onsite_cache: dict = {}


def _parity(x: np.ndarray) -> np.ndarray:
    x = x.copy()
    for shift in (32, 16, 8, 4, 2, 1):
        x ^= x >> shift
    return x & 1


def _pair_indices(nbits: int, j: int, k: int, smask: int):
    """(indices with bit j=0, k=1; their partners; Z-string signs)."""
    key = (nbits, j, k, smask)
    hit = _pair_cache.get(key)
    if hit is not None:
        return hit
    idx = np.arange(1 << nbits, dtype=np.int64)
    i01 = idx[((idx >> j) & 1 == 0) & ((idx >> k) & 1 == 1)]
    i10 = i01 ^ ((1 << j) | (1 << k))
    sign = 1.0 - 2.0 * _parity(i01 & smask) if smask else np.ones(i01.size)
    _pair_cache[key] = (i01, i10, sign)
    return _pair_cache[key]


def _onsite_indices(nbits: int, mask: int) -> np.ndarray:
    key = (nbits, mask)
    hit = _onsite_cache.get(key)
    if hit is None:
        idx = np.arange(1 << nbits, dtype=np.int64)
        hit = _onsite_cache[key] = idx[(idx & mask) == mask]
    return hit


def _nbits(amps: np.ndarray) -> int:
    return int(amps.size).bit_length() - 1


def onsite_phase(amps: np.ndarray, mask: int, re: float, im: float) -> None:
    sel = _onsite_indices(_nbits(amps), mask)
    amps[sel] *= complex(re, im)


def hopping_rotation(amps: np.ndarray, j: int, k: int, smask: int, c: float, s: float) -> None:
    i01, i10, sign = _pair_indices(_nbits(amps), j, k, smask)
    a, b = amps[i01], amps[i10]
    off = 1j * s * sign
    amps[i01] = c * a + off * b
    amps[i10] = off * a + c * b


def fswap(amps: np.ndarray, j: int, k: int) -> None:
    i01, i10, _ = _pair_indices(_nbits(amps), j, k, 0)
    amps[i01], amps[i10] = amps[i10].copy(), amps[i01].copy()
    both = _onsite_indices(_nbits(amps), (1 << j) | (1 << k))
    amps[both] *= -1.0


def pair_hadamard(amps: np.ndarray, j: int, k: int) -> None:
    i01, i10, _ = _pair_indices(_nbits(amps), j, k, 0)
    a, b = amps[i01], amps[i10]
    amps[i01] = (a + b) * _SQRT_HALF
    amps[i10] = (a - b) * _SQRT_HALF


def expect_onsite(amps: np.ndarray, mask: int) -> float:
    sel = _onsite_indices(_nbits(amps), mask)
    block = amps[sel]
    return float(np.real(np.vdot(block, block)))


def expect_hopping(amps: np.ndarray, j: int, k: int, smask: int) -> float:
    i01, i10, sign = _pair_indices(_nbits(amps), j, k, smask)
    return float(2.0 * np.sum(sign * np.real(np.conj(amps[i01]) * amps[i10])))


ONSITE = 0
HOPPING = 1


def apply_circuit(amps, kinds, js, ks, smasks, angles) -> None:
    """Apply a precompiled gate sequence; angles are the per-gate rotations."""
    for g in range(len(kinds)):
        th = float(angles[g])
        if kinds[g] == ONSITE:
            mask = (1 << int(js[g])) | (1 << int(ks[g]))
            onsite_phase(amps, mask, np.cos(th), np.sin(th))
        else:
            hopping_rotation(amps, int(js[g]), int(ks[g]), int(smasks[g]),
                             np.cos(th), np.sin(th))

# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled state-vector kernels.

Two-qubit operations enumerate the affected index pairs directly: every
basis index is split around bit positions j < k, so a gate touches dim/4
pair slots without scanning the full register. Inner loops use explicit
real arithmetic on the raw amplitude buffer. apply_circuit fuses a whole
gate sequence into one call.
"""

cimport cython

cdef extern from "math.h" nogil:
    double cos(double)
    double sin(double)

ONSITE = 0
HOPPING = 1
DEF KIND_ONSITE = 0


cdef inline long long _spread(long long idx, int j, int k) nogil:
    """Insert zero bits at positions j and k (j < k) into a packed index."""
    cdef long long low = idx & ((1LL << j) - 1)
    cdef long long rest = idx >> j
    cdef long long mid = rest & ((1LL << (k - j - 1)) - 1)
    cdef long long high = rest >> (k - j - 1)
    return low | (mid << (j + 1)) | (high << (k + 1))


cdef inline double _string_sign(long long i, long long smask) nogil:
    cdef long long m = i & smask
    m ^= m >> 32
    m ^= m >> 16
    m ^= m >> 8
    m ^= m >> 4
    m ^= m >> 2
    m ^= m >> 1
    return 1.0 - 2.0 * <double>(m & 1)


cdef void _onsite_phase(double* d, long long dim, int j, int k,
                        double c, double s) nogil:
    cdef long long p, base, npairs = dim >> 2
    cdef long long bits = (1LL << j) | (1LL << k)
    cdef double re, im
    for p in range(npairs):
        base = (_spread(p, j, k) | bits) << 1
        re = d[base]
        im = d[base + 1]
        d[base] = c * re - s * im
        d[base + 1] = c * im + s * re


cdef void _hopping_rotation(double* d, long long dim, int j, int k,
                            long long smask, double c, double s) nogil:
    # block [[c, i*ss], [i*ss, c]] on (a01, a10), ss = s * string sign
    cdef long long p, base, i01, i10, npairs = dim >> 2
    cdef double ss, ar, ai, br, bi
    for p in range(npairs):
        base = _spread(p, j, k)
        i01 = (base | (1LL << k)) << 1
        i10 = (base | (1LL << j)) << 1
        ss = s * _string_sign(base, smask)
        ar = d[i01]
        ai = d[i01 + 1]
        br = d[i10]
        bi = d[i10 + 1]
        d[i01] = c * ar - ss * bi
        d[i01 + 1] = c * ai + ss * br
        d[i10] = c * br - ss * ai
        d[i10 + 1] = c * bi + ss * ar


def onsite_phase(double complex[::1] amps, long long mask, double re, double im):
    cdef int j = 0, k = 63
    while not (mask >> j) & 1:
        j += 1
    while not (mask >> k) & 1:
        k -= 1
    with nogil:
        _onsite_phase(<double*>&amps[0], amps.shape[0], j, k, re, im)


def hopping_rotation(double complex[::1] amps, int j, int k, long long smask,
                     double c, double s):
    with nogil:
        _hopping_rotation(<double*>&amps[0], amps.shape[0], j, k, smask, c, s)


def fswap(double complex[::1] amps, int j, int k):
    cdef long long p, base, i01, i10, i11, npairs = amps.shape[0] >> 2
    cdef long long bits = (1LL << j) | (1LL << k)
    cdef double* d = <double*>&amps[0]
    cdef double tr, ti
    with nogil:
        for p in range(npairs):
            base = _spread(p, j, k)
            i01 = (base | (1LL << k)) << 1
            i10 = (base | (1LL << j)) << 1
            i11 = (base | bits) << 1
            tr = d[i01]
            ti = d[i01 + 1]
            d[i01] = d[i10]
            d[i01 + 1] = d[i10 + 1]
            d[i10] = tr
            d[i10 + 1] = ti
            d[i11] = -d[i11]
            d[i11 + 1] = -d[i11 + 1]


def pair_hadamard(double complex[::1] amps, int j, int k):
    cdef long long p, base, i01, i10, npairs = amps.shape[0] >> 2
    cdef double inv_sqrt2 = 0.7071067811865476
    cdef double* d = <double*>&amps[0]
    cdef double ar, ai, br, bi
    with nogil:
        for p in range(npairs):
            base = _spread(p, j, k)
            i01 = (base | (1LL << k)) << 1
            i10 = (base | (1LL << j)) << 1
            ar = d[i01]
            ai = d[i01 + 1]
            br = d[i10]
            bi = d[i10 + 1]
            d[i01] = (ar + br) * inv_sqrt2
            d[i01 + 1] = (ai + bi) * inv_sqrt2
            d[i10] = (ar - br) * inv_sqrt2
            d[i10 + 1] = (ai - bi) * inv_sqrt2


def expect_onsite(double complex[::1] amps, long long mask):
    cdef int j = 0, k = 63
    while not (mask >> j) & 1:
        j += 1
    while not (mask >> k) & 1:
        k -= 1
    cdef long long p, base, npairs = amps.shape[0] >> 2
    cdef long long bits = (1LL << j) | (1LL << k)
    cdef double* d = <double*>&amps[0]
    cdef double acc = 0.0
    with nogil:
        for p in range(npairs):
            base = (_spread(p, j, k) | bits) << 1
            acc += d[base] * d[base] + d[base + 1] * d[base + 1]
    return acc


def expect_hopping(double complex[::1] amps, int j, int k, long long smask):
    cdef long long p, base, i01, i10, npairs = amps.shape[0] >> 2
    cdef double* d = <double*>&amps[0]
    cdef double acc = 0.0
    with nogil:
        for p in range(npairs):
            base = _spread(p, j, k)
            i01 = (base | (1LL << k)) << 1
            i10 = (base | (1LL << j)) << 1
            acc += _string_sign(base, smask) * (d[i01] * d[i10] + d[i01 + 1] * d[i10 + 1])
    return 2.0 * acc


def apply_circuit(double complex[::1] amps, const signed char[::1] kinds,
                  const int[::1] js, const int[::1] ks,
                  const long long[::1] smasks, const double[::1] angles):
    """Apply a precompiled gate sequence; angles are the per-gate rotations."""
    cdef Py_ssize_t g, ngates = kinds.shape[0]
    cdef long long dim = amps.shape[0]
    cdef double* d = <double*>&amps[0]
    cdef double c, s
    with nogil:
        for g in range(ngates):
            c = cos(angles[g])
            s = sin(angles[g])
            if kinds[g] == KIND_ONSITE:
                _onsite_phase(d, dim, js[g], ks[g], c, s)
            else:
                _hopping_rotation(d, dim, js[g], ks[g], smasks[g], c, s)

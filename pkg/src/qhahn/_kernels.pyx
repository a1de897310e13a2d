# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Monte Carlo kernels; mirrors _kernels_py bit for bit."""
from libc.stdint cimport uint64_t, int64_t

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL


cdef inline uint64_t _mix(uint64_t z) nogil:
    z = z + GOLDEN
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline double _uniform(uint64_t seed, uint64_t worker, uint64_t step, uint64_t site) nogil:
    cdef uint64_t h = _mix(seed)
    h = _mix(h ^ worker)
    h = _mix(h ^ step)
    h = _mix(h ^ site)
    return <double>(h >> 11) * (1.0 / 9007199254740992.0)


def mix64(z):
    return _mix(<uint64_t>z)


def counter_uniform(seed, worker, step, site):
    return _uniform(<uint64_t>seed, <uint64_t>worker, <uint64_t>step, <uint64_t>site)


def run_ring(int64_t[::1] occ, int64_t steps, double[:, ::1] cdf, uint64_t seed, uint64_t worker,
             int64_t step0, int64_t bond, int64_t[::1] codes, int64_t[::1] current):
    cdef Py_ssize_t L = occ.shape[0]
    cdef Py_ssize_t i
    cdef int64_t s, n, m, last, code, mult, base, total = 0
    cdef double u
    cdef int64_t[64] moved
    if L > 64:
        raise ValueError("compiled kernel supports at most 64 sites")
    for i in range(L):
        total += occ[i]
    base = total + 1
    with nogil:
        for s in range(steps):
            for i in range(L):
                n = occ[i]
                m = 0
                if n:
                    u = _uniform(seed, worker, <uint64_t>(step0 + s), <uint64_t>i)
                    while u >= cdf[n, m]:
                        m += 1
                moved[i] = m
            code = 0
            mult = 1
            last = moved[L - 1]
            for i in range(L):
                occ[i] += last - moved[i]
                last = moved[i]
                code += occ[i] * mult
                mult *= base
            codes[s] = code
            if bond >= 0:
                current[s] = moved[bond]
            else:
                current[s] = 0

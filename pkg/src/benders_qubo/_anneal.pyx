# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Single-flip Metropolis annealing over a QUBO, one independent chain per read.

Must stay step-for-step identical to _anneal_py.anneal, including the order in
which random numbers are drawn.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp
from libc.stdint cimport uint64_t, uint8_t
from libc.stdlib cimport malloc, free

cnp.import_array()

cdef double EXP_CUTOFF = 40.0
cdef double INV_2_53 = 1.0 / 9007199254740992.0


cdef inline uint64_t rotl(uint64_t x, int k) noexcept nogil:
    return (x << k) | (x >> (64 - k))


cdef inline uint64_t splitmix64(uint64_t* state) noexcept nogil:
    state[0] += <uint64_t>0x9E3779B97F4A7C15ULL
    cdef uint64_t z = state[0]
    z = (z ^ (z >> 30)) * <uint64_t>0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * <uint64_t>0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline uint64_t xoshiro_next(uint64_t* s) noexcept nogil:
    cdef uint64_t result = rotl(s[1] * 5, 7) * 9
    cdef uint64_t t = s[1] << 17
    s[2] ^= s[0]
    s[3] ^= s[1]
    s[1] ^= s[2]
    s[0] ^= s[3]
    s[2] ^= t
    s[3] = rotl(s[3], 45)
    return result


cdef inline void seed_rng(uint64_t* s, uint64_t seed) noexcept nogil:
    cdef uint64_t sm = seed
    s[0] = splitmix64(&sm)
    s[1] = splitmix64(&sm)
    s[2] = splitmix64(&sm)
    s[3] = splitmix64(&sm)


def anneal(const double[:, ::1] J, const double[::1] h, const double[::1] betas,
           Py_ssize_t num_reads, uint64_t seed, uint8_t[:, ::1] out):
    """J: symmetric coupling matrix with zero diagonal; h: diagonal of the QUBO.

    Writes the final state of read r into out[r].
    """
    cdef Py_ssize_t N = h.shape[0]
    cdef Py_ssize_t S = betas.shape[0]
    cdef Py_ssize_t r, s, i, j
    cdef uint64_t rng[4]
    cdef double beta, dE, x
    cdef bint accept
    cdef const double* Ji
    cdef const double* J0 = &J[0, 0] if N > 0 else NULL
    cdef const double* hp = &h[0] if N > 0 else NULL
    cdef double* f = <double*> malloc(N * sizeof(double))
    cdef uint8_t* z = <uint8_t*> malloc(N * sizeof(uint8_t))
    if (f == NULL or z == NULL) and N > 0:
        free(f)
        free(z)
        raise MemoryError()
    try:
        with nogil:
            for r in range(num_reads):
                seed_rng(rng, seed ^ <uint64_t>r)
                for i in range(N):
                    z[i] = <uint8_t>(xoshiro_next(rng) >> 63)
                for i in range(N):
                    Ji = J0 + i * N
                    f[i] = 0.0
                    for j in range(N):
                        if z[j]:
                            f[i] = f[i] + Ji[j]
                for s in range(S):
                    beta = betas[s]
                    for i in range(N):
                        dE = hp[i] + f[i]
                        if z[i]:
                            dE = -dE
                        if dE <= 0.0:
                            accept = True
                        else:
                            x = beta * dE
                            if x < EXP_CUTOFF:
                                accept = (xoshiro_next(rng) >> 11) * INV_2_53 < exp(-x)
                            else:
                                accept = False
                        if accept:
                            z[i] = 1 - z[i]
                            Ji = J0 + i * N
                            if z[i]:
                                for j in range(N):
                                    f[j] = f[j] + Ji[j]
                            else:
                                for j in range(N):
                                    f[j] = f[j] - Ji[j]
                for i in range(N):
                    out[r, i] = z[i]
    finally:
        free(f)
        free(z)

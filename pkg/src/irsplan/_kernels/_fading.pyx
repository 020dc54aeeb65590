# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled exact fading kernel.

Streams the 2N+1 exponential draws of each composite-channel realization
(N interleaved pairs for the cascaded element amplitudes, then the direct
path) without materializing arrays.  Uses the same ziggurat sampler as
numpy's Generator, so draw values match the numpy backend bit for bit.
"""

from libc.math cimport sqrt

from cpython.pycapsule cimport PyCapsule_GetPointer

from numpy.random cimport bitgen_t
from numpy.random.c_distributions cimport random_standard_exponential


def exact_tail_stats(bit_generator, Py_ssize_t n_draws, Py_ssize_t n_elems,
                     double g_i, double g_r, double g_d, double z2_min):
    """Stream n_draws composite realizations; return (count, sum_z2, sum_z4)."""
    cdef bitgen_t *state
    capsule = bit_generator.capsule
    state = <bitgen_t *> PyCapsule_GetPointer(capsule, "BitGenerator")
    cdef double a = sqrt(g_i * g_r)
    cdef double s2 = 0.0, s4 = 0.0, x, z, z2
    cdef long long count = 0
    cdef Py_ssize_t k, j
    with bit_generator.lock, nogil:
        for k in range(n_draws):
            x = 0.0
            for j in range(n_elems):
                x += sqrt(random_standard_exponential(state)
                          * random_standard_exponential(state))
            z = a * x + sqrt(g_d * random_standard_exponential(state))
            z2 = z * z
            if z2 >= z2_min:
                count += 1
            s2 += z2
            s4 += z2 * z2
    return int(count), s2, s4

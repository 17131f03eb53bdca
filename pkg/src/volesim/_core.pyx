# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled stepping kernel for the discrete renewal recurrence.

Mirrors volesim._fallback.run_steps; selected at import by volesim._backend.
"""

from libc.math cimport isfinite, pow


def run_steps(double[::1] births, double[::1] survival_reversed, double[::1] seasonal,
              Py_ssize_t p, Py_ssize_t n_steps, Py_ssize_t step0,
              double m0, double gamma, bint use_quad,
              double n1, double n2, double qa, double qb, double qc,
              double overflow_limit, double[::1] mature_out):
    """Advance the birth recurrence n_steps steps in place.

    births must hold the 2p-step pre-history in [0:2p] and room for
    n_steps more values; mature values are written to mature_out. Returns
    -1 on success, else the relative index of the step where the mature
    value went non-finite or exceeded overflow_limit.
    """
    cdef Py_ssize_t twop = 2 * p
    cdef Py_ssize_t i, k
    cdef double n_val, m
    for i in range(n_steps):
        n_val = 0.0
        for k in range(twop):
            n_val += survival_reversed[k] * births[i + k]
        mature_out[i] = n_val
        if not isfinite(n_val) or n_val > overflow_limit:
            return i
        if n_val <= n1:
            m = m0
        elif use_quad and n_val <= n2:
            m = m0 * (qa + qb * n_val + qc * n_val * n_val)
        else:
            m = m0 * pow(n_val, -gamma)
        births[twop + i] = m * n_val * seasonal[(step0 + i) % p] / p
    return -1

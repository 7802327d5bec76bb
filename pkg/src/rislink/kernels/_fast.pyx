# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled rate/sweep kernels.

Same contracts as ``_numpy.py``; these exist because the rate chain runs in
the innermost loop of both training and the codebook sweep, where per-call
NumPy overhead dominates at desk-scale matrix sizes.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, log2, sin

cnp.import_array()

BACKEND = "cython"


def user_rates(direct, ris_user, bs_ris, phases, active, w, double sigma2):
    """Per-user spectral efficiencies; see kernels._numpy.user_rates."""
    cdef double complex[:, ::1] h_d = np.ascontiguousarray(direct, dtype=np.complex128)
    cdef double complex[:, ::1] h_r = np.ascontiguousarray(ris_user, dtype=np.complex128)
    cdef double complex[:, ::1] g = np.ascontiguousarray(bs_ris, dtype=np.complex128)
    cdef double[::1] th = np.ascontiguousarray(phases, dtype=np.float64)
    cdef double[::1] act = np.ascontiguousarray(active, dtype=np.float64)
    cdef double complex[:, ::1] wm = np.ascontiguousarray(w, dtype=np.complex128)

    cdef Py_ssize_t n_users = h_d.shape[0]
    cdef Py_ssize_t n_bs = h_d.shape[1]
    cdef Py_ssize_t n_ris = h_r.shape[1]
    cdef Py_ssize_t k, m, n, j

    cdef cnp.ndarray[cnp.complex128_t, ndim=1] heff_arr = np.empty(n_bs, dtype=np.complex128)
    cdef double complex[::1] heff = heff_arr
    cdef cnp.ndarray[cnp.float64_t, ndim=1] rates = np.empty(n_users, dtype=np.float64)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] rot_arr = np.empty(n_ris, dtype=np.complex128)
    cdef double complex[::1] rot = rot_arr
    cdef cnp.ndarray[cnp.float64_t, ndim=1] pow_arr = np.empty(n_users, dtype=np.float64)
    cdef double[::1] pw = pow_arr

    cdef double complex acc, inner
    cdef double sig, interf

    for m in range(n_ris):
        rot[m] = cos(th[m]) + 1j * sin(th[m])

    for k in range(n_users):
        for n in range(n_bs):
            acc = act[k] * h_d[k, n].conjugate()
            for m in range(n_ris):
                acc = acc + h_r[k, m].conjugate() * rot[m] * g[m, n]
            heff[n] = acc
        for j in range(n_users):
            inner = 0
            for n in range(n_bs):
                inner = inner + heff[n] * wm[n, j]
            pw[j] = inner.real * inner.real + inner.imag * inner.imag
        sig = pw[k]
        interf = 0.0
        for j in range(n_users):
            if j != k:
                interf += pw[j]
        rates[k] = log2(1.0 + sig / (interf + sigma2))
    return rates


def greedy_beam_rates(beam_power, double sigma2):
    """Greedy beam assignment; see kernels._numpy.greedy_beam_rates."""
    cdef double[:, ::1] p = np.ascontiguousarray(beam_power, dtype=np.float64)
    cdef Py_ssize_t n_users = p.shape[0]
    cdef Py_ssize_t n_beams = p.shape[1]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] chosen = np.zeros(n_users, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] interf_arr = np.zeros(n_users, dtype=np.float64)
    cdef double[::1] interf = interf_arr
    cdef cnp.ndarray[cnp.float64_t, ndim=1] rates = np.empty(n_users, dtype=np.float64)
    cdef Py_ssize_t k, q, j, best
    cdef double gamma, best_gamma, total, sig

    for k in range(n_users):
        best = 0
        best_gamma = -1.0
        for q in range(n_beams):
            gamma = p[k, q] / (interf[k] + sigma2)
            if gamma > best_gamma:
                best_gamma = gamma
                best = q
        chosen[k] = best
        for j in range(n_users):
            if j != k:
                interf[j] += p[j, best]

    for k in range(n_users):
        total = 0.0
        for j in range(n_users):
            total += p[k, chosen[j]]
        sig = p[k, chosen[k]]
        rates[k] = log2(1.0 + sig / (total - sig + sigma2))
    return chosen, rates

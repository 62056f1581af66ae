# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels; see ``_kernels_py`` for the reference semantics."""
import numpy as np

cimport numpy as cnp

cnp.import_array()

NAME = "cython"

cdef double DUST = 1e-12


cdef inline void _matmul(const double complex[:, ::1] a, const double complex[:, ::1] b,
                         double complex[:, ::1] out, Py_ssize_t d) noexcept nogil:
    cdef Py_ssize_t i, j, k
    cdef double complex aik
    for i in range(d):
        for j in range(d):
            out[i, j] = 0
        for k in range(d):
            aik = a[i, k]
            if aik == 0:
                continue
            for j in range(d):
                out[i, j] = out[i, j] + aik * b[k, j]


cdef inline void _matmul_adj_acc(const double complex[:, ::1] a, const double complex[:, ::1] b,
                                 double complex[:, ::1] out, Py_ssize_t d) noexcept nogil:
    # out += a @ b†
    cdef Py_ssize_t i, j, k
    cdef double complex s
    for i in range(d):
        for j in range(d):
            s = 0
            for k in range(d):
                s = s + a[i, k] * b[j, k].conjugate()
            out[i, j] = out[i, j] + s


cdef void _kraus_apply(const double complex[:, :, ::1] kraus, Py_ssize_t lo, Py_ssize_t hi,
                       const double complex[:, ::1] rho, double complex[:, ::1] tmp,
                       double complex[:, ::1] out, Py_ssize_t d) noexcept nogil:
    cdef Py_ssize_t i, j, k
    for i in range(d):
        for j in range(d):
            out[i, j] = 0
    for k in range(lo, hi):
        _matmul(kraus[k], rho, tmp, d)
        _matmul_adj_acc(tmp, kraus[k], out, d)


def kraus_apply(kraus, rho):
    cdef const double complex[:, :, ::1] kv = np.ascontiguousarray(kraus, dtype=np.complex128)
    cdef const double complex[:, ::1] rv = np.ascontiguousarray(rho, dtype=np.complex128)
    cdef Py_ssize_t d = rv.shape[0]
    out = np.empty((d, d), dtype=np.complex128)
    tmp = np.empty((d, d), dtype=np.complex128)
    cdef double complex[:, ::1] ov = out
    cdef double complex[:, ::1] tv = tmp
    with nogil:
        _kraus_apply(kv, 0, kv.shape[0], rv, tv, ov, d)
    return out


cdef inline Py_ssize_t _choose(const double[::1] probs, Py_ssize_t m, double u) noexcept nogil:
    cdef double total = 0.0, acc = 0.0, target
    cdef Py_ssize_t j, last = -1
    for j in range(m):
        total += probs[j]
    target = u * total
    for j in range(m):
        if probs[j] <= 0.0:
            continue
        last = j
        acc += probs[j]
        if target < acc:
            return j
    return last


def choose_outcome(probs, double u):
    """Index ``j`` with cumulative weight first exceeding ``u · Σ probs``."""
    cdef const double[::1] pv = np.ascontiguousarray(probs, dtype=np.float64)
    return _choose(pv, pv.shape[0], u)


def sample_outcomes(unitaries, effects, step_offsets, kraus, kraus_offsets, rho0, uniforms):
    cdef const double complex[:, :, ::1] uv = np.ascontiguousarray(unitaries, dtype=np.complex128)
    cdef const double complex[:, :, ::1] ev = np.ascontiguousarray(effects, dtype=np.complex128)
    cdef const cnp.int64_t[::1] so = np.ascontiguousarray(step_offsets, dtype=np.int64)
    cdef const double complex[:, :, ::1] kv = np.ascontiguousarray(kraus, dtype=np.complex128)
    cdef const cnp.int64_t[::1] ko = np.ascontiguousarray(kraus_offsets, dtype=np.int64)
    cdef const double complex[:, ::1] r0 = np.ascontiguousarray(rho0, dtype=np.complex128)
    cdef const double[:, ::1] un = np.ascontiguousarray(uniforms, dtype=np.float64)

    cdef Py_ssize_t n = un.shape[0], n_steps = un.shape[1], d = r0.shape[0]
    cdef Py_ssize_t max_out = 1, s
    for s in range(n_steps):
        if so[s + 1] - so[s] > max_out:
            max_out = so[s + 1] - so[s]

    out = np.empty((n, n_steps), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] ov = out
    cdef double complex[:, ::1] rho = np.empty((d, d), dtype=np.complex128)
    cdef double complex[:, ::1] tmp = np.empty((d, d), dtype=np.complex128)
    cdef double complex[:, ::1] nxt = np.empty((d, d), dtype=np.complex128)
    cdef double[::1] probs = np.empty(max_out, dtype=np.float64)

    cdef Py_ssize_t i, a, b, j, g, lo, m
    cdef double complex acc
    cdef double tr, p

    with nogil:
        for i in range(n):
            for a in range(d):
                for b in range(d):
                    rho[a, b] = r0[a, b]
            for s in range(n_steps):
                # rho <- U rho U†
                _matmul(uv[s], rho, tmp, d)
                for a in range(d):
                    for b in range(d):
                        nxt[a, b] = 0
                _matmul_adj_acc(tmp, uv[s], nxt, d)
                lo = so[s]
                m = so[s + 1] - lo
                for j in range(m):
                    acc = 0
                    for a in range(d):
                        for b in range(d):
                            acc = acc + ev[lo + j, a, b] * nxt[b, a]
                    p = acc.real
                    probs[j] = p if p >= DUST else 0.0
                j = _choose(probs, m, un[i, s])
                g = lo + j
                _kraus_apply(kv, ko[g], ko[g + 1], nxt, tmp, rho, d)
                tr = 0.0
                for a in range(d):
                    tr += rho[a, a].real
                for a in range(d):
                    for b in range(d):
                        rho[a, b] = rho[a, b] / tr
                ov[i, s] = j
    return out

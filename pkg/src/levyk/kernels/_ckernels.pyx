# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: trigonometric sums and windowed direct convolution."""

import numpy as np
cimport numpy as cnp
from cython.parallel cimport prange
from libc.math cimport cos, sin
from libc.stdlib cimport malloc, free

cnp.import_array()


def cosine_sum(double[::1] rho, double[::1] w, double[::1] x, int threads=1):
    """out[j] = sum_k w[k] cos(rho[k] x[j])."""
    cdef Py_ssize_t nk = rho.shape[0], nx = x.shape[0], j, k
    cdef double acc, xj
    out = np.zeros(nx, dtype=np.float64)
    cdef double[::1] o = out
    for j in prange(nx, nogil=True, num_threads=threads, schedule="static"):
        xj = x[j]
        acc = 0.0
        for k in range(nk):
            acc = acc + w[k] * cos(rho[k] * xj)
        o[j] = acc
    return out


def versine_sum(double[::1] s, double[::1] w, double[::1] x, int threads=1):
    """out[j] = sum_k w[k] (1 - cos(s[k] x[j])), as 2 sin^2 to avoid
    cancellation at small arguments."""
    cdef Py_ssize_t nk = s.shape[0], nx = x.shape[0], j, k
    cdef double acc, xj, v
    out = np.zeros(nx, dtype=np.float64)
    cdef double[::1] o = out
    for j in prange(nx, nogil=True, num_threads=threads, schedule="static"):
        xj = 0.5 * x[j]
        acc = 0.0
        for k in range(nk):
            v = sin(s[k] * xj)
            acc = acc + w[k] * v * v
        o[j] = 2.0 * acc
    return out


def versine_grid(double[::1] s, double[::1] w, double drho, Py_ssize_t n,
                 int threads=1):
    """out[k] = sum_j w[j] (1 - cos(k drho s[j])) for k = 0..n-1.

    The angle is advanced by an exact rotation written in terms of the
    versine, so nothing cancels at small angles; the state is reseeded
    from sin every 64 steps to bound the drift. The inner loop runs over
    the nodes and vectorises.
    """
    cdef Py_ssize_t ns = s.shape[0], nb = (n + 63) // 64, b, j, k, k0, k1
    cdef double th, half, acc, vn
    cdef double *vt
    cdef double *st
    cdef double *v
    cdef double *sn
    out = np.zeros(n, dtype=np.float64)
    cdef double[::1] o = out
    cdef double[::1] vt_all = np.empty(ns)
    cdef double[::1] st_all = np.empty(ns)
    for j in range(ns):
        th = drho * s[j]
        half = sin(0.5 * th)
        vt_all[j] = 2.0 * half * half
        st_all[j] = sin(th)
    vt = &vt_all[0] if ns > 0 else NULL
    st = &st_all[0] if ns > 0 else NULL
    if ns == 0:
        return out
    for b in prange(nb, nogil=True, num_threads=threads, schedule="static"):
        v = <double *> malloc(ns * sizeof(double))
        sn = <double *> malloc(ns * sizeof(double))
        k0 = b * 64
        k1 = k0 + 64
        if k1 > n:
            k1 = n
        for j in range(ns):
            th = k0 * drho * s[j]
            half = sin(0.5 * th)
            v[j] = 2.0 * half * half
            sn[j] = sin(th)
        for k in range(k0, k1):
            acc = 0.0
            for j in range(ns):
                acc = acc + w[j] * v[j]
                vn = v[j] + vt[j] - v[j] * vt[j] + sn[j] * st[j]
                sn[j] = sn[j] - sn[j] * vt[j] + (1.0 - v[j]) * st[j]
                v[j] = vn
            o[k] = acc
        free(v)
        free(sn)
    return out


def direct_convolve(double[::1] a, double[::1] b, Py_ssize_t lo, Py_ssize_t hi,
                    int threads=1):
    """Entries lo..hi-1 of the full linear convolution of a and b.

    Exact zero runs at either end of ``a`` are skipped. All products are
    accumulated directly, so tiny entries keep their relative accuracy.
    """
    cdef Py_ssize_t na = a.shape[0], nb = b.shape[0], n, i, i0, i1, off
    cdef Py_ssize_t a0 = 0, a1 = na
    cdef double acc, s0, s1, s2, s3
    cdef Py_ssize_t m
    # b reversed, so the inner loop walks both arrays forwards
    cdef double[::1] br = np.ascontiguousarray(b[::-1])
    while a0 < na and a[a0] == 0.0:
        a0 += 1
    while a1 > a0 and a[a1 - 1] == 0.0:
        a1 -= 1
    out = np.zeros(max(hi - lo, 0), dtype=np.float64)
    cdef double[::1] o = out
    for n in prange(lo, hi, nogil=True, num_threads=threads, schedule="static"):
        # a[i] * b[n - i] needs 0 <= n - i < nb
        i0 = n - nb + 1
        if i0 < a0:
            i0 = a0
        i1 = n + 1
        if i1 > a1:
            i1 = a1
        off = nb - 1 - n
        # four independent accumulators keep the FMA pipes busy
        s0 = 0.0
        s1 = 0.0
        s2 = 0.0
        s3 = 0.0
        m = i0
        while m + 4 <= i1:
            s0 = s0 + a[m] * br[m + off]
            s1 = s1 + a[m + 1] * br[m + 1 + off]
            s2 = s2 + a[m + 2] * br[m + 2 + off]
            s3 = s3 + a[m + 3] * br[m + 3 + off]
            m = m + 4
        acc = (s0 + s1) + (s2 + s3)
        while m < i1:
            acc = acc + a[m] * br[m + off]
            m = m + 1
        o[n - lo] = acc
    return out

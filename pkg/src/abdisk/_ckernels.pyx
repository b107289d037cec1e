# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: P1 element matrices and the dense symmetric
eigen-decomposition (Householder tridiagonalisation + implicit QL).
Mirrors ``_pykernels`` exactly."""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, sqrt, hypot, copysign

cnp.import_array()

cdef double[3][3] GB = [[2.0 / 3, 1.0 / 6, 1.0 / 6],
                        [1.0 / 6, 2.0 / 3, 1.0 / 6],
                        [1.0 / 6, 1.0 / 6, 2.0 / 3]]


def element_matrices(const double[:, ::1] points, const long[:, ::1] tris, wq=None):
    cdef Py_ssize_t nt = tris.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=3] ke_arr = np.empty((nt, 3, 3))
    cdef cnp.ndarray[cnp.float64_t, ndim=3] me_arr = np.empty((nt, 3, 3))
    cdef cnp.ndarray[cnp.float64_t, ndim=1] area_arr = np.empty(nt)
    cdef double[:, :, ::1] ke = ke_arr
    cdef double[:, :, ::1] me = me_arr
    cdef double[::1] area = area_arr
    cdef const double[:, ::1] w
    cdef bint weighted = wq is not None
    if weighted:
        w = np.ascontiguousarray(wq, dtype=np.float64)
    cdef Py_ssize_t t, i, j, q
    cdef double x0, y0, x1, y1, x2, y2, a, s
    cdef double gx[3]
    cdef double gy[3]
    for t in range(nt):
        x0 = points[tris[t, 0], 0]; y0 = points[tris[t, 0], 1]
        x1 = points[tris[t, 1], 0]; y1 = points[tris[t, 1], 1]
        x2 = points[tris[t, 2], 0]; y2 = points[tris[t, 2], 1]
        a = 0.5 * ((x1 - x0) * (y2 - y0) - (y1 - y0) * (x2 - x0))
        if a <= 0:
            raise ValueError(f"degenerate or inverted triangle {t} (signed area {a:.3e})")
        area[t] = a
        gx[0] = -(y2 - y1) / (2 * a); gy[0] = (x2 - x1) / (2 * a)
        gx[1] = -(y0 - y2) / (2 * a); gy[1] = (x0 - x2) / (2 * a)
        gx[2] = -(y1 - y0) / (2 * a); gy[2] = (x1 - x0) / (2 * a)
        for i in range(3):
            for j in range(3):
                ke[t, i, j] = a * (gx[i] * gx[j] + gy[i] * gy[j])
                if weighted:
                    s = 0.0
                    for q in range(3):
                        s += w[t, q] * GB[q][i] * GB[q][j]
                    me[t, i, j] = a / 3.0 * s
                else:
                    me[t, i, j] = a / 12.0 * (2.0 if i == j else 1.0)
    return ke_arr, me_arr, area_arr


def tridiagonalize(a_in, bint want_q=True):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] a_arr = np.array(a_in, dtype=np.float64, order="C", copy=True)
    cdef double[:, ::1] a = a_arr
    cdef Py_ssize_t n = a.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] vs_arr = np.zeros((max(n - 2, 0), n))
    cdef double[:, ::1] vs = vs_arr
    cdef cnp.ndarray[cnp.float64_t, ndim=1] betas_arr = np.zeros(max(n - 2, 0))
    cdef double[::1] betas = betas_arr
    cdef cnp.ndarray[cnp.float64_t, ndim=1] p_arr = np.zeros(n)
    cdef double[::1] p = p_arr
    cdef Py_ssize_t k, i, j, m
    cdef double alpha, vnorm2, beta, pv, vi, wi, s
    for k in range(n - 2):
        m = k + 1
        alpha = 0.0
        for i in range(m, n):
            alpha += a[i, k] * a[i, k]
        alpha = sqrt(alpha)
        if alpha == 0.0:
            continue
        if a[m, k] > 0:
            alpha = -alpha
        for i in range(m, n):
            vs[k, i] = a[i, k]
        vs[k, m] -= alpha
        vnorm2 = 0.0
        for i in range(m, n):
            vnorm2 += vs[k, i] * vs[k, i]
        if vnorm2 == 0.0:
            continue
        beta = 2.0 / vnorm2
        betas[k] = beta
        pv = 0.0
        for i in range(m, n):
            s = 0.0
            for j in range(m, n):
                s += a[i, j] * vs[k, j]
            p[i] = beta * s
            pv += p[i] * vs[k, i]
        for i in range(m, n):
            p[i] -= 0.5 * beta * pv * vs[k, i]
        for i in range(m, n):
            vi = vs[k, i]
            wi = p[i]
            for j in range(m, n):
                a[i, j] -= vi * p[j] + wi * vs[k, j]
        a[m, k] = alpha
        a[k, m] = alpha
        for i in range(m + 1, n):
            a[i, k] = 0.0
            a[k, i] = 0.0
    d = np.diag(a_arr).copy()
    e = np.zeros(n)
    if n > 1:
        e[1:] = np.diag(a_arr, -1)
    if not want_q:
        return d, e, None
    cdef cnp.ndarray[cnp.float64_t, ndim=2] q_arr = np.eye(n)
    cdef double[:, ::1] q = q_arr
    for k in range(n - 3, -1, -1):
        beta = betas[k]
        if beta == 0.0:
            continue
        m = k + 1
        # q[m:, m:] -= beta * v (v^T q[m:, m:])
        for j in range(m, n):
            p[j] = 0.0
        for i in range(m, n):
            vi = vs[k, i]
            if vi != 0.0:
                for j in range(m, n):
                    p[j] += vi * q[i, j]
        for i in range(m, n):
            vi = beta * vs[k, i]
            if vi != 0.0:
                for j in range(m, n):
                    q[i, j] -= vi * p[j]
    return d, e, q_arr


def tql2(d_in, e_in, z=None, int max_iter=60):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] d_arr = np.array(d_in, dtype=np.float64, copy=True)
    cdef double[::1] d = d_arr
    cdef Py_ssize_t n = d.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] e_arr = np.zeros(n)
    if n > 1:
        e_arr[:n - 1] = np.asarray(e_in, dtype=np.float64)[1:]
    cdef double[::1] e = e_arr
    cdef bint vectors = z is not None
    cdef cnp.ndarray[cnp.float64_t, ndim=2] zt_arr
    cdef double[:, ::1] zt
    if vectors:
        zt_arr = np.ascontiguousarray(np.asarray(z, dtype=np.float64).T)
        zt = zt_arr
    cdef Py_ssize_t l, m, i, k, ncol
    cdef int it
    cdef double dd, g, r, s, c, p, f, b, zi
    cdef bint underflow
    ncol = n
    for l in range(n):
        it = 0
        while True:
            m = l
            while m < n - 1:
                dd = fabs(d[m]) + fabs(d[m + 1])
                if fabs(e[m]) <= 2.2e-16 * dd:
                    break
                m += 1
            if m == l:
                break
            it += 1
            if it > max_iter:
                raise RuntimeError("tridiagonal QL did not converge")
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + copysign(r, g))
            s = 1.0
            c = 1.0
            p = 0.0
            i = m - 1
            underflow = False
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                if vectors:
                    for k in range(ncol):
                        zi = zt[i + 1, k]
                        zt[i + 1, k] = s * zt[i, k] + c * zi
                        zt[i, k] = c * zt[i, k] - s * zi
                i -= 1
            if underflow:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    order = np.argsort(d_arr, kind="stable")
    w = d_arr[order]
    if not vectors:
        return w, None
    return w, zt_arr[order].T.copy()

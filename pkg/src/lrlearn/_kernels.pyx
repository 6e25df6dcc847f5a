# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot loops: LASSO coordinate descent and shadow collapse sampling."""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, sqrt

cnp.import_array()


cdef inline double _soft(double z, double a) nogil:
    if z > a:
        return z - a
    if z < -a:
        return z + a
    return 0.0


cdef double _kkt(double[::1, :] X, double[::1] r, double[::1] w, double alpha, Py_ssize_t N) nogil:
    cdef Py_ssize_t i, j, m = X.shape[1]
    cdef double g, v, worst = 0.0
    for j in range(m):
        g = 0.0
        for i in range(N):
            g += X[i, j] * r[i]
        g = -g / N
        if w[j] > 0:
            v = fabs(g + alpha)
        elif w[j] < 0:
            v = fabs(g - alpha)
        else:
            v = fabs(g) - alpha
        if v > worst:
            worst = v
    return worst


def cd_lasso(X, y, double alpha, w0, double y0, double tol, int max_iter, bint fit_intercept):
    """Cyclic coordinate descent for (1/2N)||y - y0 - Xw||^2 + alpha ||w||_1.

    Same contract as the pure-Python version: returns
    (w, y0, cycles, objective per cycle, converged).
    """
    cdef double[::1, :] Xv = np.asfortranarray(X, dtype=np.float64)
    cdef double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef Py_ssize_t N = Xv.shape[0], m = Xv.shape[1]
    w_arr = np.array(w0, dtype=np.float64, copy=True)
    cdef double[::1] w = w_arr
    r_arr = np.empty(N)
    cdef double[::1] r = r_arr
    col_arr = np.empty(m)
    cdef double[::1] col = col_arr
    objs = np.empty(max(max_iter, 1))
    cdef double[::1] ob = objs
    cdef Py_ssize_t i, j
    cdef double s, rho, new, wj, dmax, d, shift
    cdef int cycles = 0
    cdef bint full = True, converged = False
    if not fit_intercept:
        y0 = 0.0
    for i in range(N):
        r[i] = yv[i] - y0
    for j in range(m):
        s = 0.0
        for i in range(N):
            s += Xv[i, j] * Xv[i, j]
        col[j] = s / N
        if w[j] != 0.0:
            for i in range(N):
                r[i] -= Xv[i, j] * w[j]
    with nogil:
        while cycles < max_iter:
            dmax = 0.0
            for j in range(m):
                if col[j] == 0.0:
                    continue
                wj = w[j]
                if not full and wj == 0.0:
                    continue
                rho = 0.0
                for i in range(N):
                    rho += Xv[i, j] * r[i]
                rho = rho / N + col[j] * wj
                new = _soft(rho, alpha) / col[j]
                if new != wj:
                    d = new - wj
                    for i in range(N):
                        r[i] -= d * Xv[i, j]
                    w[j] = new
                    if fabs(d) > dmax:
                        dmax = fabs(d)
            if fit_intercept:
                shift = 0.0
                for i in range(N):
                    shift += r[i]
                shift /= N
                y0 += shift
                for i in range(N):
                    r[i] -= shift
                if fabs(shift) > dmax:
                    dmax = fabs(shift)
            s = 0.0
            for i in range(N):
                s += r[i] * r[i]
            rho = 0.0
            for j in range(m):
                rho += fabs(w[j])
            ob[cycles] = 0.5 * s / N + alpha * rho
            cycles += 1
            if dmax <= tol:
                if full and _kkt(Xv, r, w, alpha, N) <= tol:
                    converged = True
                    break
                full = True
            else:
                full = False
    return w_arr, y0, cycles, objs[:cycles].copy(), bool(converged)


def shadow_collapse(psi, bases, u):
    """Outcome bits of sequential single-qubit measurements (qubit 0 = most significant)."""
    cdef double complex[::1] p = np.ascontiguousarray(psi, dtype=np.complex128)
    cdef unsigned char[:, ::1] B = np.ascontiguousarray(bases, dtype=np.uint8)
    cdef double[:, ::1] U = np.ascontiguousarray(u, dtype=np.float64)
    cdef Py_ssize_t T = B.shape[0], n = B.shape[1], dim = p.shape[0]
    bits_arr = np.zeros((T, n), dtype=np.uint8)
    cdef unsigned char[:, ::1] bits = bits_arr
    buf_arr = np.empty(dim, dtype=np.complex128)
    cdef double complex[::1] v = buf_arr
    cdef Py_ssize_t t, q, k, half, length
    cdef double complex a, b, c0, c1
    cdef double p0, p1, h = sqrt(0.5)
    cdef unsigned char basis
    cdef bint bit
    with nogil:
        for t in range(T):
            for k in range(dim):
                v[k] = p[k]
            length = dim
            for q in range(n):
                half = length // 2
                basis = B[t, q]
                p0 = 0.0
                p1 = 0.0
                for k in range(half):
                    a = v[k]
                    b = v[k + half]
                    if basis == 2:
                        c0 = a
                        c1 = b
                    elif basis == 0:
                        c0 = (a + b) * h
                        c1 = (a - b) * h
                    else:
                        c0 = (a - 1j * b) * h
                        c1 = (a + 1j * b) * h
                    p0 += c0.real * c0.real + c0.imag * c0.imag
                    p1 += c1.real * c1.real + c1.imag * c1.imag
                bit = U[t, q] * (p0 + p1) >= p0
                bits[t, q] = bit
                for k in range(half):
                    a = v[k]
                    b = v[k + half]
                    if basis == 2:
                        c0 = b if bit else a
                    elif basis == 0:
                        c0 = ((a - b) if bit else (a + b)) * h
                    else:
                        c0 = ((a + 1j * b) if bit else (a - 1j * b)) * h
                    v[k] = c0
                length = half
    return bits_arr

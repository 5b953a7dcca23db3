# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled SMO inner loop for the one-class dual problem.

Minimizes 0.5 * a.T @ K @ a subject to sum(a) = 1, 0 <= a_i <= C, by
maximal-violating-pair updates. Mirrors _slowsmo.solve exactly; the
pure-Python module is the fallback when this extension is not built.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def solve(double[:, ::1] K, double C, double tol, long max_iter):
    cdef Py_ssize_t n = K.shape[0]
    cdef cnp.ndarray[double, ndim=1] alpha_arr = np.zeros(n)
    cdef double[::1] alpha = alpha_arr
    cdef cnp.ndarray[double, ndim=1] grad_arr = np.zeros(n)
    cdef double[::1] grad = grad_arr
    cdef Py_ssize_t i, j, t, m
    cdef double rest, gi, gj, viol, denom, delta
    cdef double eps = 1e-12
    cdef long it = 0

    # feasible start: first floor(1/C) variables at the upper bound,
    # remainder on the next one
    m = <Py_ssize_t>(1.0 / C)
    if m > n:
        m = n
    for i in range(m):
        alpha[i] = C
    rest = 1.0 - m * C
    if rest > eps and m < n:
        alpha[m] = rest

    for i in range(n):
        gi = 0.0
        for j in range(n):
            if alpha[j] > 0.0:
                gi += K[i, j] * alpha[j]
        grad[i] = gi

    cdef double best_up, best_low
    cdef Py_ssize_t i_up, i_low

    while it < max_iter:
        best_up = 1e308
        best_low = -1e308
        i_up = -1
        i_low = -1
        for t in range(n):
            if alpha[t] < C - eps and grad[t] < best_up:
                best_up = grad[t]
                i_up = t
            if alpha[t] > eps and grad[t] > best_low:
                best_low = grad[t]
                i_low = t
        viol = best_low - best_up
        if i_up < 0 or i_low < 0 or viol <= tol:
            return alpha_arr, grad_arr, it, (viol if viol > 0.0 else 0.0), True
        denom = K[i_up, i_up] + K[i_low, i_low] - 2.0 * K[i_up, i_low]
        if denom < 1e-12:
            denom = 1e-12
        delta = viol / denom
        if delta > C - alpha[i_up]:
            delta = C - alpha[i_up]
        if delta > alpha[i_low]:
            delta = alpha[i_low]
        alpha[i_up] += delta
        alpha[i_low] -= delta
        for t in range(n):
            grad[t] += delta * (K[t, i_up] - K[t, i_low])
        it += 1

    # recompute final violation for the diagnostic
    best_up = 1e308
    best_low = -1e308
    for t in range(n):
        if alpha[t] < C - eps and grad[t] < best_up:
            best_up = grad[t]
        if alpha[t] > eps and grad[t] > best_low:
            best_low = grad[t]
    viol = best_low - best_up
    return alpha_arr, grad_arr, it, (viol if viol > 0.0 else 0.0), False

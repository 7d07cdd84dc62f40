# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: RBF-family Gram matrices and the SMO dual solver.

Mirrors ``crrbf._pycore`` operation for operation; both are checked against
each other in the test suite.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, INFINITY
from libc.stdint cimport uint64_t

cnp.import_array()

cdef double TAU = 1e-12  # floor for non-positive curvature


def weighted_rbf_gram(const double[:, ::1] A, const double[:, ::1] B,
                      const double[::1] weights):
    """exp(-sum_i w_i (a_i - b_i)^2) for every row pair of A and B."""
    cdef Py_ssize_t na = A.shape[0], nb = B.shape[0], d = A.shape[1]
    cdef Py_ssize_t i, j, t
    cdef double acc, diff
    out = np.empty((na, nb), dtype=np.float64)
    cdef double[:, ::1] K = out
    with nogil:
        for i in range(na):
            for j in range(nb):
                acc = 0.0
                for t in range(d):
                    diff = A[i, t] - B[j, t]
                    acc = acc + weights[t] * diff * diff
                K[i, j] = exp(-acc)
    return out


def weighted_rbf_gram_sym(const double[:, ::1] A, const double[::1] weights):
    """Symmetric variant: each unordered pair is evaluated once and mirrored."""
    cdef Py_ssize_t n = A.shape[0], d = A.shape[1]
    cdef Py_ssize_t i, j, t
    cdef double acc, diff
    out = np.empty((n, n), dtype=np.float64)
    cdef double[:, ::1] K = out
    with nogil:
        for i in range(n):
            K[i, i] = 1.0
            for j in range(i + 1, n):
                acc = 0.0
                for t in range(d):
                    diff = A[i, t] - A[j, t]
                    acc = acc + weights[t] * diff * diff
                K[i, j] = exp(-acc)
                K[j, i] = K[i, j]
    return out


cdef inline uint64_t _xorshift(uint64_t *state) noexcept nogil:
    cdef uint64_t x = state[0]
    x ^= x << 13
    x ^= x >> 7
    x ^= x << 17
    state[0] = x
    return x


cdef inline bint _in_up(double y, double a, double C) noexcept nogil:
    return (y > 0 and a < C) or (y < 0 and a > 0)


cdef inline bint _in_low(double y, double a, double C) noexcept nogil:
    return (y > 0 and a > 0) or (y < 0 and a < C)


def smo_solve(const double[:, ::1] K, const double[::1] y, double C,
              double tol, long max_iter, long max_no_progress,
              unsigned long long seed):
    """Solve min 1/2 a'Qa - e'a, 0 <= a <= C, y'a = 0 with Q_ij = y_i y_j K_ij.

    Returns (alpha, grad, iterations, gap, converged).
    """
    cdef Py_ssize_t n = K.shape[0]
    alpha_arr = np.zeros(n, dtype=np.float64)
    grad_arr = np.full(n, -1.0, dtype=np.float64)
    cdef double[::1] alpha = alpha_arr
    cdef double[::1] G = grad_arr
    cdef uint64_t state = <uint64_t>seed * 2654435761ULL + 88172645463325252ULL
    cdef long it = 0, stalled = 0, nviol
    cdef Py_ssize_t t, i, j, pick
    cdef double gmax, gmax2, gap = INFINITY, v, grad_diff, quad, obj, obj_min
    cdef double yi, yj, ai_old, aj_old, qij, delta, diff, total, dai, daj
    cdef bint converged = False
    if state == 0:
        state = 88172645463325252ULL

    with nogil:
        while it < max_iter:
            # i: maximal violator in the "up" set
            gmax = -INFINITY
            i = -1
            for t in range(n):
                if _in_up(y[t], alpha[t], C):
                    v = -y[t] * G[t]
                    if v >= gmax:
                        gmax = v
                        i = t
            # j: second-order gain over violators in the "low" set
            gmax2 = -INFINITY
            j = -1
            obj_min = INFINITY
            nviol = 0
            for t in range(n):
                if _in_low(y[t], alpha[t], C):
                    v = y[t] * G[t]
                    if v >= gmax2:
                        gmax2 = v
                    if i >= 0:
                        grad_diff = gmax + v
                        if grad_diff > 0:
                            nviol += 1
                            quad = K[i, i] + K[t, t] - 2.0 * K[i, t]
                            if quad <= 0:
                                quad = TAU
                            obj = -(grad_diff * grad_diff) / quad
                            if obj <= obj_min:
                                obj_min = obj
                                j = t
            gap = gmax + gmax2
            if gap < tol:
                converged = True
                break
            if j < 0:
                break

            if stalled > 0:
                # no progress last step: random violator as second choice
                pick = <Py_ssize_t>(_xorshift(&state) % <uint64_t>nviol)
                for t in range(n):
                    if _in_low(y[t], alpha[t], C) and gmax + y[t] * G[t] > 0:
                        if pick == 0:
                            j = t
                            break
                        pick -= 1

            it += 1
            yi = y[i]
            yj = y[j]
            ai_old = alpha[i]
            aj_old = alpha[j]
            qij = yi * yj * K[i, j]
            if yi != yj:
                quad = K[i, i] + K[j, j] + 2.0 * qij
                if quad <= 0:
                    quad = TAU
                delta = (-G[i] - G[j]) / quad
                diff = alpha[i] - alpha[j]
                alpha[i] += delta
                alpha[j] += delta
                if diff > 0:
                    if alpha[j] < 0:
                        alpha[j] = 0
                        alpha[i] = diff
                else:
                    if alpha[i] < 0:
                        alpha[i] = 0
                        alpha[j] = -diff
                if diff > 0:
                    if alpha[i] > C:
                        alpha[i] = C
                        alpha[j] = C - diff
                else:
                    if alpha[j] > C:
                        alpha[j] = C
                        alpha[i] = C + diff
            else:
                quad = K[i, i] + K[j, j] - 2.0 * qij
                if quad <= 0:
                    quad = TAU
                delta = (G[i] - G[j]) / quad
                total = alpha[i] + alpha[j]
                alpha[i] -= delta
                alpha[j] += delta
                if total > C:
                    if alpha[i] > C:
                        alpha[i] = C
                        alpha[j] = total - C
                else:
                    if alpha[j] < 0:
                        alpha[j] = 0
                        alpha[i] = total
                if total > C:
                    if alpha[j] > C:
                        alpha[j] = C
                        alpha[i] = total - C
                else:
                    if alpha[i] < 0:
                        alpha[i] = 0
                        alpha[j] = total

            dai = alpha[i] - ai_old
            daj = alpha[j] - aj_old
            if dai == 0.0 and daj == 0.0:
                stalled += 1
                if stalled > max_no_progress:
                    break
                continue
            stalled = 0
            for t in range(n):
                G[t] += y[t] * (yi * K[i, t] * dai + yj * K[j, t] * daj)

    return alpha_arr, grad_arr, it, gap, bool(converged)

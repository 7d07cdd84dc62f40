"""Independent reference computations used by the tests.

Nothing here imports the code under test except plain data containers.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


def brute_force_dual(K, y, C):
    """Exact soft-margin dual optimum by active-set enumeration (n <= ~9).

    Each coefficient is fixed at 0, fixed at C, or free; for every pattern the
    equality-constrained stationary point on the free set is solved directly
    and kept if it is feasible. With a positive definite Gram the best feasible
    candidate is the global maximum of sum(a) - 1/2 a'Qa.
    """
    K = np.asarray(K, dtype=float)
    y = np.asarray(y, dtype=float)
    n = y.size
    Q = np.outer(y, y) * K
    best_val, best_alpha = -math.inf, None
    for pattern in itertools.product((0, 1, 2), repeat=n):
        pattern = np.array(pattern)
        free = np.flatnonzero(pattern == 2)
        alpha = np.where(pattern == 1, C, 0.0).astype(float)
        bound = np.flatnonzero(pattern != 2)
        rhs_eq = -float(y[bound] @ alpha[bound])
        if free.size == 0:
            if abs(rhs_eq) > 1e-9 * max(1.0, C):
                continue
        else:
            m = free.size
            A = np.zeros((m + 1, m + 1))
            A[:m, :m] = Q[np.ix_(free, free)]
            A[:m, m] = y[free]
            A[m, :m] = y[free]
            b = np.empty(m + 1)
            b[:m] = 1.0 - Q[np.ix_(free, bound)] @ alpha[bound]
            b[m] = rhs_eq
            try:
                sol = np.linalg.solve(A, b)
            except np.linalg.LinAlgError:
                continue
            a_free = sol[:m]
            slack = 1e-10 * max(1.0, C)
            if np.any(a_free < -slack) or np.any(a_free > C + slack):
                continue
            alpha[free] = np.clip(a_free, 0.0, C)
        val = float(alpha.sum() - 0.5 * alpha @ Q @ alpha)
        if val > best_val:
            best_val, best_alpha = val, alpha
    return best_val, best_alpha


def rbf_gram_loops(X, gamma):
    """Double loop over pairs with math.exp; no numpy broadcasting."""
    n = len(X)
    out = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            s = 0.0
            for a, b in zip(X[i], X[j]):
                s += (a - b) ** 2
            out[i, j] = math.exp(-gamma * s)
    return out


def best_two_partition_1d(points):
    """Global K-Means optimum for k=2 by trying every 2-partition."""
    pts = list(points)
    n = len(pts)
    best = (math.inf, None)
    for mask in range(1, 2 ** n - 1):
        a = [p for i, p in enumerate(pts) if mask >> i & 1]
        b = [p for i, p in enumerate(pts) if not mask >> i & 1]
        ma, mb = sum(a) / len(a), sum(b) / len(b)
        inertia = sum((p - ma) ** 2 for p in a) + sum((p - mb) ** 2 for p in b)
        if inertia < best[0] - 1e-15:
            best = (inertia, (frozenset(a), frozenset(b)))
    return best

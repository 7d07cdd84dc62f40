"""Pure-Python/numpy implementations of the hot kernels.

Same contract and same iteration order as the compiled ``_ccore`` module, so
the two backends agree to floating-point noise. Selected automatically when
the extension is not built, or forced with ``CRRBF_PURE_PYTHON=1``.
"""

from __future__ import annotations

import numpy as np

TAU = 1e-12
_MASK64 = (1 << 64) - 1


def weighted_rbf_gram(A: np.ndarray, B: np.ndarray, weights: np.ndarray) -> np.ndarray:
    out = np.empty((A.shape[0], B.shape[0]))
    for i in range(A.shape[0]):
        diff = A[i] - B
        out[i] = np.exp(-((diff * diff) @ weights))
    return out


def weighted_rbf_gram_sym(A: np.ndarray, weights: np.ndarray) -> np.ndarray:
    n = A.shape[0]
    out = np.empty((n, n))
    for i in range(n):
        out[i, i] = 1.0
        if i + 1 < n:
            diff = A[i] - A[i + 1:]
            row = np.exp(-((diff * diff) @ weights))
            out[i, i + 1:] = row
            out[i + 1:, i] = row
    return out


class _XorShift:
    def __init__(self, seed: int):
        state = (seed * 2654435761 + 88172645463325252) & _MASK64
        self.state = state or 88172645463325252

    def next(self) -> int:
        x = self.state
        x ^= (x << 13) & _MASK64
        x ^= x >> 7
        x ^= (x << 17) & _MASK64
        self.state = x
        return x


def _last_argmax(values: np.ndarray) -> int:
    return len(values) - 1 - int(np.argmax(values[::-1]))


def smo_solve(K, y, C, tol, max_iter, max_no_progress, seed):
    n = K.shape[0]
    alpha = np.zeros(n)
    G = np.full(n, -1.0)
    diag = np.diag(K).copy()
    rng = _XorShift(int(seed))
    it = 0
    stalled = 0
    gap = np.inf
    converged = False
    pos = y > 0
    while it < max_iter:
        up = (pos & (alpha < C)) | (~pos & (alpha > 0))
        low = (pos & (alpha > 0)) | (~pos & (alpha < C))
        score = -y * G
        if up.any():
            up_idx = np.flatnonzero(up)
            i = int(up_idx[_last_argmax(score[up_idx])])
            gmax = score[i]
        else:
            i, gmax = -1, -np.inf
        low_idx = np.flatnonzero(low)
        gmax2 = (y * G)[low_idx].max() if low_idx.size else -np.inf
        j = -1
        viol = np.empty(0, dtype=np.intp)
        if i >= 0 and low_idx.size:
            grad_diff = gmax + (y * G)[low_idx]
            keep = grad_diff > 0
            viol = low_idx[keep]
            if viol.size:
                quad = diag[i] + diag[viol] - 2.0 * K[i, viol]
                quad = np.where(quad <= 0, TAU, quad)
                obj = -(grad_diff[keep] ** 2) / quad
                j = int(viol[len(obj) - 1 - int(np.argmin(obj[::-1]))])
        gap = gmax + gmax2
        if gap < tol:
            converged = True
            break
        if j < 0:
            break
        if stalled > 0:
            j = int(viol[rng.next() % viol.size])

        it += 1
        yi, yj = y[i], y[j]
        ai_old, aj_old = alpha[i], alpha[j]
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
            elif alpha[i] < 0:
                alpha[i] = 0
                alpha[j] = -diff
            if diff > 0:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = C - diff
            elif alpha[j] > C:
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
            elif alpha[j] < 0:
                alpha[j] = 0
                alpha[i] = total
            if total > C:
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = total - C
            elif alpha[i] < 0:
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
        G += y * (yi * K[i] * dai + yj * K[j] * daj)
    return alpha, G, it, float(gap), bool(converged)

"""Pure-Python/numpy fallback for the SMO inner loop.

Same contract as the compiled _fastsmo extension: minimize
0.5 * a.T @ K @ a subject to sum(a) = 1, 0 <= a_i <= C, by
maximal-violating-pair updates.
"""

import numpy as np

_EPS = 1e-12


def solve(K, C, tol, max_iter):
    """Returns (alpha, grad, iterations, violation, converged)."""
    K = np.ascontiguousarray(K, dtype=np.float64)
    n = len(K)
    alpha = np.zeros(n)
    m = min(int(1.0 / C), n)
    alpha[:m] = C
    rest = 1.0 - m * C
    if rest > _EPS and m < n:
        alpha[m] = rest
    grad = K @ alpha

    it = 0
    while it < max_iter:
        up_mask = alpha < C - _EPS
        low_mask = alpha > _EPS
        if not up_mask.any() or not low_mask.any():
            return alpha, grad, it, 0.0, True
        g_up = np.where(up_mask, grad, np.inf)
        g_low = np.where(low_mask, grad, -np.inf)
        i_up = int(np.argmin(g_up))
        i_low = int(np.argmax(g_low))
        viol = float(grad[i_low] - grad[i_up])
        if viol <= tol:
            return alpha, grad, it, max(viol, 0.0), True
        denom = max(K[i_up, i_up] + K[i_low, i_low] - 2.0 * K[i_up, i_low], _EPS)
        delta = min(viol / denom, C - alpha[i_up], alpha[i_low])
        alpha[i_up] += delta
        alpha[i_low] -= delta
        grad += delta * (K[:, i_up] - K[:, i_low])
        it += 1

    g_up = np.where(alpha < C - _EPS, grad, np.inf)
    g_low = np.where(alpha > _EPS, grad, -np.inf)
    viol = float(g_low.max() - g_up.min())
    return alpha, grad, it, max(viol, 0.0), False

"""Independent reference computations used as test oracles.

Nothing here reuses the package's neighborhood operator, design matrix or
likelihood code: neighborhoods are rebuilt with explicit loops.
"""

import math

import numpy as np
from scipy import optimize


def rook_self_neighbors(n, i):
    r, c = divmod(i, n)
    out = [i]
    for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1)):
        rr, cc = r + dr, c + dc
        if 0 <= rr < n and 0 <= cc < n:
            out.append(rr * n + cc)
    return out


def brute_stats(counts, n):
    T1, k, n_tiles = counts.shape
    S = np.zeros((T1 - 1, k, n_tiles))
    for t in range(1, T1):
        for d in range(k):
            for i in range(n_tiles):
                nb = rook_self_neighbors(n, i)
                S[t - 1, d, i] = sum(math.log(1 + counts[t - 1, d, j]) for j in nb) / len(nb)
    return S


def brute_loglik(alpha, beta, counts, n, S=None):
    if S is None:
        S = brute_stats(counts, n)
    T1, k, n_tiles = counts.shape
    total = 0.0
    for t in range(1, T1):
        for c in range(k):
            for i in range(n_tiles):
                v = alpha[c] + sum(beta[c][d] * S[t - 1, d, i] for d in range(k))
                total += counts[t, c, i] * v - math.exp(v)
    return total


def central_diff(f, x, h=1e-6):
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = h
        g[j] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def numeric_hessian(f, x, h=1e-4):
    x = np.asarray(x, dtype=float)
    p = x.size
    H = np.empty((p, p))
    for a in range(p):
        for b in range(p):
            ea = np.zeros(p)
            eb = np.zeros(p)
            ea[a] = h
            eb[b] = h
            H[a, b] = (f(x + ea + eb) - f(x + ea - eb) - f(x - ea + eb) + f(x - ea - eb)) / (4 * h * h)
    return H


def generic_mle(y, n):
    """Independent maximizer: BFGS with finite-difference gradients on the brute-force likelihood."""
    S = brute_stats(y.counts, n)
    k = y.n_colors

    def negll(th):
        a = th[:k]
        b = th[k:].reshape(k, k)
        return -brute_loglik(a, b, y.counts, n, S)

    x0 = np.zeros(k + k * k)
    res = optimize.minimize(negll, x0, method="BFGS", jac="3-point", options={"gtol": 1e-10, "maxiter": 2000})
    th = res.x
    # Newton polish on a finite-difference Hessian (still no package code)
    for _ in range(3):
        g = central_diff(negll, th, 1e-5)
        H = numeric_hessian(negll, th, 1e-4)
        th = th - np.linalg.solve(H, g)
    return th, -negll(th)

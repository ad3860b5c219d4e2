"""Pure-Python versions of the compiled kernels in ``_kernels.pyx``."""

import math

import numpy as np


def gamma_series_weights(alphas, ratios, log_c, tol, max_terms):
    """Mixture weights ``C * delta_k`` of the sum-of-gammas series.

    Returns ``(weights, remainder, converged)``.
    """
    alphas = [float(a) for a in alphas]
    ratios = [float(r) for r in ratios]
    s = [0.0] * len(alphas)
    w = [math.exp(log_c)]
    total = w[0]
    k = 0
    while 1.0 - total >= tol and k < max_terms:
        k += 1
        prev = w[-1]
        acc = 0.0
        for g, (a, r) in enumerate(zip(alphas, ratios)):
            s[g] = r * (s[g] + prev)
            acc += a * s[g]
        w.append(acc / k)
        total += w[-1]
    remainder = max(1.0 - total, 0.0)
    return np.array(w), remainder, remainder < tol


def _margins(counts):
    c = counts.astype(float)
    return c, c.sum(axis=1), c.sum(axis=0), c.sum()


def g2_counts(counts):
    c, rows, cols, n = _margins(np.asarray(counts))
    # column-major traversal, same as the compiled loop
    obs = c.T.ravel()
    exp_ = np.outer(cols, rows).ravel()
    keep = obs > 0
    return 2.0 * float(np.sum(obs[keep] * np.log(obs[keep] * n / exp_[keep])))


def pearson_counts(counts):
    c, rows, cols, n = _margins(np.asarray(counts))
    e = np.outer(rows, cols) / n
    if np.any(e <= 0):
        raise ZeroDivisionError("zero expected count")
    return float(np.sum(((c - e) ** 2 / e).T))


def crosstab_codes(x, y, ni, nj):
    x = np.asarray(x, dtype=np.int64)
    y = np.asarray(y, dtype=np.int64)
    if x.size and (x.min() < 0 or x.max() >= ni or y.min() < 0 or y.max() >= nj):
        raise IndexError("category code out of range")
    flat = np.bincount(x * nj + y, minlength=ni * nj)
    return flat.reshape(ni, nj).astype(np.int64)

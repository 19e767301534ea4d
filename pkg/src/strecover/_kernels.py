"""Numba kernels for the per-entry SGD passes.

These loops run millions of times per training run, so they operate on raw
arrays: the factor matrices, pass-ordered entry triplets, the CSR pieces of
the spatial Gram A = L^T L, and the temporal Gram applied as a tridiagonal
stencil. Everything is sequential and allocation-free, so results are
bitwise reproducible run to run.
"""

import numpy as np
from numba import njit


@njit(cache=True, nogil=True, inline="always")
def _regularized_coef(X, Y, i, j, delta, indptr, indices, data, beta1, beta2):
    """delta minus the weighted spatial and temporal correlation scalars."""
    d = X.shape[1]
    n_cols = Y.shape[0]
    # spatial: (A[i, :] @ X) . Y[j]
    sig_s = 0.0
    for p in range(indptr[i], indptr[i + 1]):
        c = indices[p]
        s = 0.0
        for t in range(d):
            s += X[c, t] * Y[j, t]
        sig_s += data[p] * s
    # temporal: X[i] . (Y^T B[:, j]) with B tridiagonal
    mid = 2.0 if 0 < j < n_cols - 1 else 1.0
    sig_t = 0.0
    for t in range(d):
        b = mid * Y[j, t]
        if j > 0:
            b -= Y[j - 1, t]
        if j < n_cols - 1:
            b -= Y[j + 1, t]
        sig_t += X[i, t] * b
    return delta - beta1 * sig_s - beta2 * sig_t


@njit(cache=True, nogil=True)
def pass_update_x(X, Y, rows, cols, vals, indptr, indices, data, lr, lam, beta1, beta2, mu):
    """One pass over entries in column-major order, updating row factors only.

    Every mu-th visited entry (counter starting at 0) gets the spatio-temporal
    update; the rest get the cheap one. Returns the number of full updates.
    """
    d = X.shape[1]
    two_eta = 2.0 * lr
    n_full = 0
    for e in range(rows.shape[0]):
        i = rows[e]
        j = cols[e]
        pred = 0.0
        for t in range(d):
            pred += X[i, t] * Y[j, t]
        delta = vals[e] - pred
        if e % mu == 0:
            coef = _regularized_coef(X, Y, i, j, delta, indptr, indices, data, beta1, beta2)
            n_full += 1
        else:
            coef = delta
        for t in range(d):
            X[i, t] += two_eta * (coef * Y[j, t] - lam * X[i, t])
    return n_full


@njit(cache=True, nogil=True)
def pass_update_y(X, Y, rows, cols, vals, indptr, indices, data, lr, lam, beta1, beta2, mu):
    """One pass over entries in row-major order, updating column factors only."""
    d = X.shape[1]
    two_eta = 2.0 * lr
    n_full = 0
    for e in range(rows.shape[0]):
        i = rows[e]
        j = cols[e]
        pred = 0.0
        for t in range(d):
            pred += X[i, t] * Y[j, t]
        delta = vals[e] - pred
        if e % mu == 0:
            coef = _regularized_coef(X, Y, i, j, delta, indptr, indices, data, beta1, beta2)
            n_full += 1
        else:
            coef = delta
        for t in range(d):
            Y[j, t] += two_eta * (coef * X[i, t] - lam * Y[j, t])
    return n_full


@njit(cache=True, nogil=True)
def squared_error_sum(X, Y, rows, cols, vals):
    """Sum of squared residuals over the given entries."""
    d = X.shape[1]
    acc = 0.0
    for e in range(rows.shape[0]):
        i = rows[e]
        j = cols[e]
        pred = 0.0
        for t in range(d):
            pred += X[i, t] * Y[j, t]
        r = vals[e] - pred
        acc += r * r
    return acc


def warm_up():
    """Compile the kernels on a tiny instance (numba caches the result)."""
    X = np.ones((2, 1))
    Y = np.ones((2, 1))
    rows = np.zeros(1, dtype=np.int64)
    cols = np.zeros(1, dtype=np.int64)
    vals = np.ones(1)
    indptr = np.zeros(3, dtype=np.int64)
    indices = np.zeros(0, dtype=np.int64)
    data = np.zeros(0)
    pass_update_x(X, Y, rows, cols, vals, indptr, indices, data, 0.0, 0.0, 0.0, 0.0, 1)
    pass_update_y(X, Y, rows, cols, vals, indptr, indices, data, 0.0, 0.0, 0.0, 0.0, 1)
    squared_error_sum(X, Y, rows, cols, vals)

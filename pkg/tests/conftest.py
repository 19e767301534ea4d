"""Shared fixtures and independent reference implementations.

The reference implementations here are deliberately naive (dense algebra,
dictionary lookups, explicit loops) so they stay independent of the library
code paths they check.
"""

import numpy as np
import pytest

import strecover as sr
from strecover import _kernels


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Compile the numba kernels once so timing tests never pay JIT cost."""
    _kernels.warm_up()


def literal_diff_matrix(n_slots):
    """The n x (n-1) difference matrix built column by column from its definition."""
    D = np.zeros((n_slots, n_slots - 1))
    for j in range(n_slots - 1):
        D[j, j] = -1.0
        D[j + 1, j] = 1.0
    return D


def dense_objective(X, Y, H, mask, L_dense, lam, beta1, beta2):
    """Objective evaluated with dense matrices and the literal difference operator."""
    R = mask * (H - X @ Y.T)
    value = 0.5 * np.sum(R * R)
    value += lam * (np.sum(X * X) + np.sum(Y * Y))
    value += beta1 * np.sum((L_dense @ (X @ Y.T)) ** 2)
    D = literal_diff_matrix(Y.shape[0])
    value += beta2 * np.sum(((X @ Y.T) @ D) ** 2)
    return value


def random_geometric_graph(rng, n_vertices, k=2):
    """A kNN Laplacian on random points, as used throughout the tests."""
    coords = rng.uniform(0.0, 10.0, size=(n_vertices, 2))
    P = sr.pairwise_distances(coords)
    return sr.laplacian(sr.knn_weights(P, k)), coords


def random_instance(rng, n_rows, n_cols, d, density=0.6):
    """Random observed matrix, factors, graph and diff operator for oracle tests."""
    graph, coords = random_geometric_graph(rng, n_rows, k=min(2, n_rows - 1))
    H = rng.uniform(1.0, 4.0, size=(n_rows, n_cols))
    mask = rng.random((n_rows, n_cols)) < density
    if not mask.any():
        mask[0, 0] = True
    ii, jj = np.nonzero(mask)
    observed = sr.ObservedMatrix.from_arrays(n_rows, n_cols, ii, jj, H[mask])
    cfg = sr.TrainConfig(
        latent_dim=d,
        reg_lambda=float(rng.uniform(0.01, 0.1)),
        lr=0.01,
        beta1=float(rng.uniform(0.01, 0.2)),
        beta2=float(rng.uniform(0.01, 0.2)),
        k_nn=2,
        seed=int(rng.integers(1 << 30)),
    )
    model = sr.init_factors(n_rows, n_cols, cfg)
    model.X[:] = rng.uniform(0.5, 1.5, size=model.X.shape)
    model.Y[:] = rng.uniform(0.5, 1.5, size=model.Y.shape)
    return model, observed, graph, sr.DiffOperator(n_cols), cfg, H, mask


def reference_epoch(X, Y, entries, A_dense, n_cols, lr, lam, beta1, beta2, mu):
    """One naive training epoch: column-ordered X pass, then row-ordered Y pass.

    Every mu-th visited entry per pass (counter from 0) applies the
    spatio-temporally regularized rule, the rest the cheap rule.
    """
    lookup = {(i, j): v for i, j, v in entries}

    def full_coef(i, j):
        x = X[i].copy()
        y = Y[j].copy()
        delta = float(lookup[(i, j)] - x @ y)
        sig_s = float((A_dense[i] @ X) @ y)
        bcol = np.zeros(n_cols)
        bidx, bvals = sr.gram_column(n_cols, j)
        bcol[bidx] = bvals
        sig_t = float(x @ (Y.T @ bcol))
        return delta - beta1 * sig_s - beta2 * sig_t

    for counter, (i, j) in enumerate(sorted(lookup, key=lambda t: (t[1], t[0]))):
        if counter % mu == 0:
            coef = full_coef(i, j)
        else:
            coef = float(lookup[(i, j)] - X[i] @ Y[j])
        X[i] = X[i] + 2.0 * lr * (coef * Y[j] - lam * X[i])
    for counter, (i, j) in enumerate(sorted(lookup, key=lambda t: (t[0], t[1]))):
        if counter % mu == 0:
            coef = full_coef(i, j)
        else:
            coef = float(lookup[(i, j)] - X[i] @ Y[j])
        Y[j] = Y[j] + 2.0 * lr * (coef * X[i] - lam * Y[j])

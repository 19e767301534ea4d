"""Temporal difference operator and its tridiagonal Gram.

The operator maps a length-N time series to its N-1 successive differences.
Its Gram B = D D^T is the path-graph Laplacian with diagonal (1, 2, ..., 2, 1)
and -1 off-diagonals; it is kept in closed form so any column is O(1) to
produce on the training hot path.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError


@dataclass(frozen=True)
class DiffOperator:
    """Successive-difference operator over ``n_slots`` time slots."""

    n_slots: int

    def __post_init__(self):
        if self.n_slots < 2:
            raise ParameterError(f"need at least 2 time slots, got {self.n_slots}")

    def apply(self, v):
        return apply_diff(v)

    def gram_column(self, j):
        return gram_column(self.n_slots, j)


def apply_diff(v):
    """Successive differences: out[j] = v[j+1] - v[j]."""
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1 or v.size < 2:
        raise ParameterError("need a 1-D vector of length >= 2")
    return np.diff(v)


def gram_column(n_slots, j):
    """Column j of the Gram B = D D^T as (row indices, values).

    At most 3 nonzeros: -1 above, the diagonal stencil value, -1 below.
    """
    if n_slots < 2:
        raise ParameterError(f"need at least 2 time slots, got {n_slots}")
    if not 0 <= j < n_slots:
        raise ParameterError(f"column index {j} out of range for {n_slots} slots")
    idx, vals = [], []
    if j > 0:
        idx.append(j - 1)
        vals.append(-1.0)
    idx.append(j)
    vals.append(2.0 if 0 < j < n_slots - 1 else 1.0)
    if j < n_slots - 1:
        idx.append(j + 1)
        vals.append(-1.0)
    return np.array(idx, dtype=np.int64), np.array(vals)


def gram_column_dense(n_slots, j):
    idx, vals = gram_column(n_slots, j)
    col = np.zeros(n_slots)
    col[idx] = vals
    return col


def apply_gram(V):
    """B @ V for a (N, d) array, via the tridiagonal stencil."""
    V = np.asarray(V, dtype=np.float64)
    n = V.shape[0]
    if n < 2:
        raise ParameterError(f"need at least 2 time slots, got {n}")
    out = 2.0 * V
    out[0] = V[0]
    out[-1] = V[-1]
    out[:-1] -= V[1:]
    out[1:] -= V[:-1]
    return out

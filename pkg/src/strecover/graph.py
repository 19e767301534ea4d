"""Sensor proximity graph: distances, kNN weights, Laplacian, and its Gram.

The graph couples rows of the data matrix that belong to nearby sensors.
Edges carry reciprocal-distance weights over each vertex's k nearest
neighbors; the directed selection is symmetrized with an elementwise max so
the resulting Laplacian is symmetric positive semidefinite. The Gram
A = L^T L is precomputed once because the regularized per-entry update reads
its rows on the hot path.
"""

import csv
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.spatial.distance import cdist

from .errors import DegenerateDistanceError, ParameterError


def pairwise_distances(coords):
    """Dense matrix of Euclidean distances between coordinate rows.

    Args:
        coords: (M, dim) array of finite sensor coordinates, M >= 2.
    Returns:
        (M, M) symmetric array with zero diagonal.
    """
    coords = np.asarray(coords, dtype=np.float64)
    if coords.ndim == 1:
        coords = coords[:, None]
    if coords.shape[0] < 2:
        raise ParameterError("need at least 2 points for pairwise distances")
    if not np.all(np.isfinite(coords)):
        raise ParameterError("coordinates must be finite")
    return cdist(coords, coords)


def top_k_indices(P, k):
    """Indices of each vertex's k nearest neighbors, self excluded.

    Ties in distance are broken toward the lower vertex index so the
    selection is deterministic.
    """
    P = np.asarray(P, dtype=np.float64)
    m = P.shape[0]
    if not 1 <= k <= m - 1:
        raise ParameterError(f"k must be in [1, {m - 1}], got {k}")
    out = np.empty((m, k), dtype=np.int64)
    for i in range(m):
        order = np.argsort(P[i], kind="stable")
        out[i] = order[order != i][:k]
    return out


def knn_weights(P, k):
    """Reciprocal-distance kNN weight matrix, max-symmetrized.

    Directed weights w[i, i'] = 1 / P[i, i'] are placed on each vertex's k
    nearest neighbors, then W <- max(W, W^T) so every selected edge survives
    in an undirected graph. A selected neighbor at distance zero is an error:
    coincident sensors must be deduplicated upstream.

    Returns a CSR sparse matrix with zero diagonal; every row has between k
    and 2k stored entries.
    """
    P = np.asarray(P, dtype=np.float64)
    m = P.shape[0]
    neighbors = top_k_indices(P, k)
    rows = np.repeat(np.arange(m, dtype=np.int64), k)
    cols = neighbors.ravel()
    dists = P[rows, cols]
    if np.any(dists == 0.0):
        bad = int(rows[np.argmax(dists == 0.0)])
        raise DegenerateDistanceError(
            f"vertex {bad} has a nearest neighbor at distance 0; deduplicate coincident sensors"
        )
    W = sparse.csr_matrix((1.0 / dists, (rows, cols)), shape=(m, m))
    W = W.maximum(W.T)
    W.sort_indices()
    return W


@dataclass(frozen=True)
class LaplacianGraph:
    """Graph Laplacian L together with its cached Gram A = L^T L (both CSR)."""

    L: sparse.csr_matrix
    A: sparse.csr_matrix

    @property
    def n_vertices(self):
        return self.L.shape[0]

    def gram_row(self, i):
        """Row i of the Gram A as (column indices, values), sparse form."""
        if not 0 <= i < self.n_vertices:
            raise ParameterError(f"row index {i} out of range for {self.n_vertices} vertices")
        start, end = self.A.indptr[i], self.A.indptr[i + 1]
        return self.A.indices[start:end].copy(), self.A.data[start:end].copy()

    def gram_row_dense(self, i):
        idx, vals = self.gram_row(i)
        row = np.zeros(self.n_vertices)
        row[idx] = vals
        return row


def laplacian(W):
    """Build the graph Laplacian of a symmetric nonnegative weight matrix.

    Diagonal entries are the row sums of W, off-diagonals are -w[i, j].
    The Gram A = L^T L is computed eagerly and cached on the result.
    """
    W = sparse.csr_matrix(W)
    m = W.shape[0]
    if W.shape[0] != W.shape[1]:
        raise ParameterError("weight matrix must be square")
    if (W != W.T).nnz != 0:
        raise ParameterError("weight matrix must be symmetric")
    if W.diagonal().any():
        raise ParameterError("weight matrix must have a zero diagonal")
    if W.nnz and W.data.min() < 0:
        raise ParameterError("weights must be nonnegative")
    degrees = np.asarray(W.sum(axis=1)).ravel()
    L = (sparse.diags(degrees, format="csr") - W).tocsr()
    A = (L.T @ L).tocsr()
    A.eliminate_zeros()
    A.sort_indices()
    L.sort_indices()
    return LaplacianGraph(L=L, A=A)


def load_coords(path):
    """Read a coordinate CSV with header ``id,x,y`` (or ``id,x1..xd``).

    Ids must be exactly 0..M-1 in any order; rows are returned sorted by id.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0].strip() != "id" or len(header) < 2:
            raise ParameterError(f"{path}: expected header 'id,x,y' or 'id,x1..xd'")
        dim = len(header) - 1
        ids, rows = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != dim + 1:
                raise ParameterError(f"{path} line {lineno}: expected {dim + 1} fields")
            try:
                ids.append(int(row[0]))
                rows.append([float(x) for x in row[1:]])
            except ValueError:
                raise ParameterError(f"{path} line {lineno}: non-numeric field") from None
    m = len(ids)
    if sorted(ids) != list(range(m)):
        raise ParameterError(f"{path}: ids must be exactly 0..{m - 1}")
    coords = np.empty((m, dim), dtype=np.float64)
    for vid, row in zip(ids, rows):
        coords[vid] = row
    if not np.all(np.isfinite(coords)):
        raise ParameterError(f"{path}: coordinates must be finite")
    return coords


def write_coords(coords, path):
    coords = np.asarray(coords, dtype=np.float64)
    dim = coords.shape[1]
    header = ["id", "x", "y"] if dim == 2 else ["id"] + [f"x{t + 1}" for t in range(dim)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for vid, row in enumerate(coords):
            fh.write(",".join([str(vid)] + [repr(float(x)) for x in row]) + "\n")

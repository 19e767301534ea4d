"""Latent factor engine: objective, per-entry updates, and the training loop.

The model factors a partially observed M x N matrix into X (M x d) and
Y (N x d) so that X Y^T fits the known entries while staying smooth across
the sensor graph and adjacent time slots. Training is element-wise SGD in
two passes per epoch: a column-ordered pass that moves only row factors,
then a row-ordered pass that moves only column factors. The expensive
spatio-temporally regularized update is applied to every mu-th visited entry
per pass, the cheap unregularized one to the rest.
"""

import json
import math
import os
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import sparse

from . import _kernels
from .errors import DivergenceError, ParameterError
from .graph import knn_weights, laplacian, pairwise_distances
from .tdiff import DiffOperator, apply_gram

X_FILE = "X.csv"
Y_FILE = "Y.csv"
META_FILE = "meta.json"


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters for one training run.

    Attributes:
        latent_dim: number of latent features per row/column.
        reg_lambda: Tikhonov penalty on factor magnitudes, >= 0.
        lr: SGD learning rate, > 0.
        beta1: spatial smoothness weight, >= 0.
        beta2: temporal smoothness weight, >= 0.
        max_epochs: epoch budget.
        full_every: apply the spatio-temporal update to every
            ``full_every``-th visited entry per pass (1 = always).
        k_nn: neighbor count for the sensor graph.
        tol: early-stop threshold on |RMSE_t - RMSE_{t-1}|.
        seed: seed for factor initialization (NumPy PCG64).
    """

    latent_dim: int = 40
    reg_lambda: float = 0.02
    lr: float = 0.005
    beta1: float = 0.01
    beta2: float = 0.01
    max_epochs: int = 3000
    full_every: int = 8
    k_nn: int = 5
    tol: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        if self.latent_dim < 1:
            raise ParameterError(f"latent_dim must be >= 1, got {self.latent_dim}")
        if self.reg_lambda < 0:
            raise ParameterError(f"reg_lambda must be >= 0, got {self.reg_lambda}")
        if not self.lr > 0:
            raise ParameterError(f"lr must be > 0, got {self.lr}")
        if self.beta1 < 0 or self.beta2 < 0:
            raise ParameterError("beta1 and beta2 must be >= 0")
        if self.max_epochs < 1:
            raise ParameterError(f"max_epochs must be >= 1, got {self.max_epochs}")
        if self.full_every < 1:
            raise ParameterError(f"full_every must be >= 1, got {self.full_every}")
        if self.k_nn < 1:
            raise ParameterError(f"k_nn must be >= 1, got {self.k_nn}")
        if math.isnan(self.tol) or self.tol < 0:
            raise ParameterError(f"tol must be >= 0, got {self.tol}")


@dataclass
class FactorModel:
    """Latent factors plus training metadata.

    The prediction for cell (i, j) is the inner product X[i] . Y[j].
    ``full_updates`` counts spatio-temporal updates applied during training;
    it is an in-memory statistic and is not serialized.
    """

    X: np.ndarray
    Y: np.ndarray
    config: TrainConfig
    epochs_run: int = 0
    final_rmse: float = float("nan")
    full_updates: int | None = None

    @property
    def n_rows(self):
        return self.X.shape[0]

    @property
    def n_cols(self):
        return self.Y.shape[0]


@dataclass
class LossTrace:
    """Per-epoch training record: epoch index, training RMSE, objective value."""

    epochs: list = field(default_factory=list)
    train_rmse: list = field(default_factory=list)
    objective: list = field(default_factory=list)

    def append(self, epoch, rmse, obj):
        self.epochs.append(int(epoch))
        self.train_rmse.append(float(rmse))
        self.objective.append(float(obj))

    def __len__(self):
        return len(self.epochs)

    def write_csv(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("epoch,rmse,objective\n")
            for e, r, o in zip(self.epochs, self.train_rmse, self.objective):
                fh.write(f"{e},{repr(r)},{repr(o)}\n")


def init_factors(n_rows, n_cols, cfg):
    """Fresh factors with entries i.i.d. uniform on (0, 0.1].

    Drawn from NumPy's PCG64 generator seeded with cfg.seed (X first, then
    Y), so the same seed reproduces the same factors bit for bit.
    """
    if n_rows < 1 or n_cols < 1:
        raise ParameterError("factor dimensions must be positive")
    rng = np.random.default_rng(cfg.seed)
    X = 0.1 * (1.0 - rng.random((n_rows, cfg.latent_dim)))
    Y = 0.1 * (1.0 - rng.random((n_cols, cfg.latent_dim)))
    return FactorModel(X=X, Y=Y, config=cfg)


def predict(model, i, j):
    """Model value for cell (i, j)."""
    if not (0 <= i < model.n_rows and 0 <= j < model.n_cols):
        raise ParameterError(f"index ({i}, {j}) outside {model.n_rows}x{model.n_cols}")
    return float(model.X[i] @ model.Y[j])


def recover(model):
    """The model's full dense reconstruction X Y^T (observations not merged)."""
    return model.X @ model.Y.T


def _check_shapes(model, observed, graph, diff):
    if observed.n_rows != model.n_rows or observed.n_cols != model.n_cols:
        raise ParameterError("observed matrix shape does not match the model")
    if graph.n_vertices != model.n_rows:
        raise ParameterError("graph size does not match the number of rows")
    if diff.n_slots != model.n_cols:
        raise ParameterError("difference operator size does not match the number of columns")


def _residuals(model, observed):
    preds = np.einsum("ij,ij->i", model.X[observed.row_idx], model.Y[observed.col_idx])
    return observed.values - preds


def objective(model, observed, graph, diff, cfg):
    """Full regularized objective.

    0.5 * sum of squared residuals over known entries
    + reg_lambda * (||X||_F^2 + ||Y||_F^2)
    + beta1 * ||L X Y^T||_F^2 + beta2 * ||X Y^T D||_F^2.

    The smoothness terms are evaluated through the d x d Gram identities
    rather than forming the M x N reconstruction.
    """
    _check_shapes(model, observed, graph, diff)
    X, Y = model.X, model.Y
    res = _residuals(model, observed)
    value = 0.5 * float(res @ res)
    value += cfg.reg_lambda * (float(np.sum(X * X)) + float(np.sum(Y * Y)))
    if cfg.beta1 != 0.0:
        AX = graph.A @ X
        value += cfg.beta1 * float(np.sum((X.T @ AX) * (Y.T @ Y)))
    if cfg.beta2 != 0.0:
        BY = apply_gram(Y)
        value += cfg.beta2 * float(np.sum((X.T @ X) * (Y.T @ BY)))
    return value


def objective_gradient(model, observed, graph, diff, cfg):
    """Exact full-batch gradient of objective() w.r.t. X and Y."""
    _check_shapes(model, observed, graph, diff)
    X, Y = model.X, model.Y
    res = _residuals(model, observed)
    R = sparse.csr_matrix(
        (res, (observed.row_idx, observed.col_idx)), shape=(model.n_rows, model.n_cols)
    )
    G_X = -(R @ Y) + 2.0 * cfg.reg_lambda * X
    G_Y = -(R.T @ X) + 2.0 * cfg.reg_lambda * Y
    if cfg.beta1 != 0.0:
        AX = graph.A @ X
        G_X += 2.0 * cfg.beta1 * (AX @ (Y.T @ Y))
        G_Y += 2.0 * cfg.beta1 * (Y @ (X.T @ AX))
    if cfg.beta2 != 0.0:
        BY = apply_gram(Y)
        G_X += 2.0 * cfg.beta2 * (X @ (Y.T @ BY))
        G_Y += 2.0 * cfg.beta2 * (BY @ (X.T @ X))
    return G_X, G_Y


def _step_rows(x, y, coef, two_eta, lam):
    x_new = x + two_eta * (coef * y - lam * x)
    y_new = y + two_eta * (coef * x - lam * y)
    return x_new, y_new


def cheap_update(model, i, j, value, cfg):
    """Unregularized SGD step on one entry; returns the new (x_i, y_j) rows.

    Both outputs are computed from the pre-update rows (simultaneous
    semantics); the model itself is not modified.
    """
    x = model.X[i]
    y = model.Y[j]
    delta = float(value - x @ y)
    return _step_rows(x, y, delta, 2.0 * cfg.lr, cfg.reg_lambda)


def full_update(model, i, j, value, graph, diff, cfg):
    """Spatio-temporally regularized SGD step on one entry.

    On top of the cheap step, the descent coefficient subtracts
    beta1 * (A[i, :] @ X) . y_j and beta2 * x_i . (Y^T B[:, j]), both
    evaluated at pre-update values. With beta1 = beta2 = 0 this reduces
    exactly to cheap_update.
    """
    X, Y = model.X, model.Y
    x = X[i]
    y = Y[j]
    delta = float(value - x @ y)
    idx, vals = graph.gram_row(i)
    sig_s = float((vals @ X[idx]) @ y) if idx.size else 0.0
    bidx, bvals = diff.gram_column(j)
    sig_t = float(x @ (bvals @ Y[bidx]))
    coef = delta - cfg.beta1 * sig_s - cfg.beta2 * sig_t
    return _step_rows(x, y, coef, 2.0 * cfg.lr, cfg.reg_lambda)


def build_graph(coords, cfg):
    """Sensor graph for training: kNN weights on pairwise distances."""
    P = pairwise_distances(coords)
    return laplacian(knn_weights(P, cfg.k_nn))


def train(observed, coords, cfg):
    """Run the interleaved two-pass SGD until convergence or the epoch budget.

    Each epoch visits the known entries twice: once grouped by column
    (ascending, rows ascending within a column) moving only X, once grouped
    by row moving only Y. Every ``cfg.full_every``-th visited entry per pass
    receives the spatio-temporal update. After both passes the training RMSE
    and objective are recorded; training stops early when the RMSE changes
    by less than cfg.tol between consecutive epochs.

    Returns (FactorModel, LossTrace). Raises DivergenceError (naming the
    epoch) if the factors leave the finite range, which usually means the
    learning rate is too large.
    """
    if observed.n_known == 0:
        raise ParameterError("training matrix has no known entries")
    coords = np.asarray(coords, dtype=np.float64)
    if coords.ndim == 1:
        coords = coords[:, None]
    if coords.shape[0] != observed.n_rows:
        raise ParameterError(
            f"coordinate count {coords.shape[0]} does not match matrix rows {observed.n_rows}"
        )
    graph = build_graph(coords, cfg)
    diff = DiffOperator(observed.n_cols)
    model = init_factors(observed.n_rows, observed.n_cols, cfg)

    indptr = graph.A.indptr.astype(np.int64)
    indices = graph.A.indices.astype(np.int64)
    gram_data = np.ascontiguousarray(graph.A.data, dtype=np.float64)

    by_col = np.lexsort((observed.row_idx, observed.col_idx))
    rows_c = observed.row_idx[by_col]
    cols_c = observed.col_idx[by_col]
    vals_c = observed.values[by_col]
    rows_r = observed.row_idx.copy()
    cols_r = observed.col_idx.copy()
    vals_r = observed.values.copy()

    trace = LossTrace()
    n = observed.n_known
    full_updates = 0
    prev_rmse = None
    for epoch in range(1, cfg.max_epochs + 1):
        full_updates += _kernels.pass_update_x(
            model.X, model.Y, rows_c, cols_c, vals_c, indptr, indices, gram_data,
            cfg.lr, cfg.reg_lambda, cfg.beta1, cfg.beta2, cfg.full_every,
        )
        full_updates += _kernels.pass_update_y(
            model.X, model.Y, rows_r, cols_r, vals_r, indptr, indices, gram_data,
            cfg.lr, cfg.reg_lambda, cfg.beta1, cfg.beta2, cfg.full_every,
        )
        sq = _kernels.squared_error_sum(model.X, model.Y, rows_r, cols_r, vals_r)
        rmse = math.sqrt(sq / n)
        if not math.isfinite(rmse) or not np.all(np.isfinite(model.X)) or not np.all(
            np.isfinite(model.Y)
        ):
            raise DivergenceError(
                f"non-finite factors at epoch {epoch}; try a smaller learning rate",
                epoch=epoch,
            )
        trace.append(epoch, rmse, objective(model, observed, graph, diff, cfg))
        if prev_rmse is not None and abs(rmse - prev_rmse) < cfg.tol:
            break
        prev_rmse = rmse

    model.epochs_run = trace.epochs[-1]
    model.final_rmse = trace.train_rmse[-1]
    model.full_updates = full_updates
    return model, trace


def _write_matrix_csv(arr, path):
    with open(path, "w", encoding="utf-8") as fh:
        for row in arr:
            fh.write(",".join(repr(float(x)) for x in row) + "\n")


def _read_matrix_csv(path):
    with open(path, encoding="utf-8") as fh:
        rows = [[float(x) for x in line.split(",")] for line in fh if line.strip()]
    return np.array(rows, dtype=np.float64)


def save_checkpoint(model, directory):
    """Write meta.json plus X.csv / Y.csv (full round-trip precision)."""
    os.makedirs(directory, exist_ok=True)
    meta = {
        "rows": model.n_rows,
        "cols": model.n_cols,
        "config": asdict(model.config),
        "epochs_run": model.epochs_run,
        "final_rmse": model.final_rmse,
    }
    with open(os.path.join(directory, META_FILE), "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2)
        fh.write("\n")
    _write_matrix_csv(model.X, os.path.join(directory, X_FILE))
    _write_matrix_csv(model.Y, os.path.join(directory, Y_FILE))


def load_checkpoint(directory):
    meta_path = os.path.join(directory, META_FILE)
    if not os.path.isfile(meta_path):
        raise ParameterError(f"no checkpoint at {directory!r} (missing {META_FILE})")
    with open(meta_path, encoding="utf-8") as fh:
        meta = json.load(fh)
    cfg = TrainConfig(**meta["config"])
    X = _read_matrix_csv(os.path.join(directory, X_FILE))
    Y = _read_matrix_csv(os.path.join(directory, Y_FILE))
    if X.shape != (meta["rows"], cfg.latent_dim) or Y.shape != (meta["cols"], cfg.latent_dim):
        raise ParameterError(f"checkpoint at {directory!r} has inconsistent shapes")
    return FactorModel(
        X=X,
        Y=Y,
        config=cfg,
        epochs_run=int(meta["epochs_run"]),
        final_rmse=float(meta["final_rmse"]),
    )

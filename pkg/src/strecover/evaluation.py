"""Recovery accuracy metrics and benchmark sweeps.

A sweep cell is one (rate, seed) or (dimension, seed) combination: split the
full dataset, train on the revealed part, score RMSE on the held-out part.
Cells are independent and may run in parallel (capped by the
STRECOVER_THREADS environment variable; 0 means one worker per CPU); the
assembled report is sorted so its content never depends on scheduling.
"""

import csv
import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, replace

import numpy as np

from .data import split_by_sampling_rate
from .engine import train
from .errors import DivergenceError, ParameterError

CSV_COLUMNS = ["dataset", "rate", "model", "seed", "d", "rmse", "epochs", "wall_ms"]
SUMMARY_COLUMNS = ["dataset", "rate", "model", "d", "n_seeds", "mean_rmse", "mean_epochs", "mean_wall_ms"]


def rmse(model, test):
    """Root mean squared error of the model over a held-out entry set."""
    if len(test) == 0:
        raise ParameterError("test set is empty")
    preds = np.einsum("ij,ij->i", model.X[test.row_idx], model.Y[test.col_idx])
    err = test.values - preds
    return float(np.sqrt(err @ err / len(test)))


def win_loss(a, b):
    """(wins, ties, losses): how often the first RMSE list is lower, equal, higher."""
    if len(a) != len(b):
        raise ParameterError(f"length mismatch: {len(a)} vs {len(b)}")
    wins = sum(1 for x, y in zip(a, b) if x < y)
    losses = sum(1 for x, y in zip(a, b) if x > y)
    return wins, len(a) - wins - losses, losses


@dataclass(frozen=True)
class EvalRecord:
    dataset: str
    rate: float
    model: str
    seed: int
    d: int
    rmse: float
    epochs: int
    wall_ms: float


@dataclass(frozen=True)
class EvalReport:
    """A list of per-cell records plus seed-aggregated summary rows."""

    records: tuple

    @classmethod
    def from_records(cls, records):
        return cls(records=tuple(sorted(records, key=_record_key)))

    def summary(self):
        """Mean rmse/epochs/wall time over seeds, per (dataset, rate, model, d)."""
        groups = {}
        for r in self.records:
            groups.setdefault((r.dataset, r.rate, r.model, r.d), []).append(r)
        rows = []
        for (dataset, rate, model, d), cells in sorted(groups.items()):
            rows.append(
                {
                    "dataset": dataset,
                    "rate": rate,
                    "model": model,
                    "d": d,
                    "n_seeds": len(cells),
                    "mean_rmse": float(np.mean([c.rmse for c in cells])),
                    "mean_epochs": float(np.mean([c.epochs for c in cells])),
                    "mean_wall_ms": float(np.mean([c.wall_ms for c in cells])),
                }
            )
        return rows

    def mean_rmse(self, **filters):
        """Mean RMSE over records matching the given field values."""
        vals = [
            r.rmse
            for r in self.records
            if all(getattr(r, k) == v for k, v in filters.items())
        ]
        if not vals:
            raise ParameterError(f"no records match {filters}")
        return float(np.mean(vals))

    def write_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write(",".join(CSV_COLUMNS) + "\n")
            for r in self.records:
                fh.write(
                    f"{r.dataset},{repr(r.rate)},{r.model},{r.seed},{r.d},"
                    f"{repr(r.rmse)},{r.epochs},{repr(r.wall_ms)}\n"
                )

    @classmethod
    def from_csv(cls, path):
        records = []
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames != CSV_COLUMNS:
                raise ParameterError(f"{path}: expected header {','.join(CSV_COLUMNS)!r}")
            for row in reader:
                records.append(
                    EvalRecord(
                        dataset=row["dataset"],
                        rate=float(row["rate"]),
                        model=row["model"],
                        seed=int(row["seed"]),
                        d=int(row["d"]),
                        rmse=float(row["rmse"]),
                        epochs=int(row["epochs"]),
                        wall_ms=float(row["wall_ms"]),
                    )
                )
        return cls.from_records(records)

    def write_summary_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write(",".join(SUMMARY_COLUMNS) + "\n")
            for row in self.summary():
                fh.write(
                    f"{row['dataset']},{repr(row['rate'])},{row['model']},{row['d']},"
                    f"{row['n_seeds']},{repr(row['mean_rmse'])},{repr(row['mean_epochs'])},"
                    f"{repr(row['mean_wall_ms'])}\n"
                )

    def write_json(self, path):
        doc = {"records": [asdict(r) for r in self.records], "summary": self.summary()}
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")

    @classmethod
    def from_json(cls, path):
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
        return cls.from_records(EvalRecord(**r) for r in doc["records"])


def _record_key(r):
    return (r.dataset, r.model, r.rate, r.d, r.seed)


def max_workers():
    """Worker cap from STRECOVER_THREADS (unset/1 = sequential, 0 = one per CPU)."""
    raw = os.environ.get("STRECOVER_THREADS", "1")
    try:
        value = int(raw)
    except ValueError:
        raise ParameterError(f"STRECOVER_THREADS must be an integer, got {raw!r}") from None
    if value < 0:
        raise ParameterError(f"STRECOVER_THREADS must be >= 0, got {value}")
    return os.cpu_count() or 1 if value == 0 else value


def _run_cells(cells, workers=None):
    workers = max_workers() if workers is None else workers
    if workers <= 1:
        return [cell() for cell in cells]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda c: c(), cells))


def _eval_cell(full, coords, rate, seed, cfg, dataset, model_label, on_divergence):
    fit, held_out = split_by_sampling_rate(full, rate, seed)
    cell_cfg = replace(cfg, seed=seed)
    start = time.perf_counter()
    try:
        model, _ = train(fit, coords, cell_cfg)
        error = rmse(model, held_out)
        epochs = model.epochs_run
    except DivergenceError as exc:
        if on_divergence == "raise":
            raise DivergenceError(
                f"divergence at rate={rate} seed={seed}: {exc}", epoch=exc.epoch
            ) from exc
        error = float("nan")
        epochs = exc.epoch or 0
    wall_ms = (time.perf_counter() - start) * 1e3
    return EvalRecord(
        dataset=dataset,
        rate=rate,
        model=model_label,
        seed=seed,
        d=cell_cfg.latent_dim,
        rmse=error,
        epochs=epochs,
        wall_ms=wall_ms,
    )


def sweep_sampling(full, coords, rates, seeds, cfg, dataset="synthetic",
                   model_label="lfa-rtd", on_divergence="raise"):
    """Train/score one model config across a sampling-rate x seed grid.

    ``on_divergence`` is either "raise" (annotate and propagate) or "record"
    (keep a NaN-RMSE record for the failed cell).
    """
    if not seeds:
        raise ParameterError("need at least one seed")
    for rate in rates:
        if not 0.0 < rate < 1.0:
            raise ParameterError(f"sweep rates must be in (0, 1), got {rate}")
    cells = [
        (lambda r=rate, s=seed: _eval_cell(full, coords, r, s, cfg, dataset,
                                           model_label, on_divergence))
        for rate in rates
        for seed in seeds
    ]
    return EvalReport.from_records(_run_cells(cells))


def sweep_dimension(full, coords, dims, rate, seeds, cfg, dataset="synthetic",
                    model_label="lfa-rtd", on_divergence="raise"):
    """Train/score across a latent-dimension x seed grid at one sampling rate."""
    if not dims:
        raise ParameterError("need at least one dimension")
    if not seeds:
        raise ParameterError("need at least one seed")
    for d in dims:
        if d < 1:
            raise ParameterError(f"latent dimensions must be >= 1, got {d}")
    if not 0.0 < rate < 1.0:
        raise ParameterError(f"sampling rate must be in (0, 1), got {rate}")
    cells = [
        (lambda dd=d, s=seed: _eval_cell(full, coords, rate, s,
                                         replace(cfg, latent_dim=dd), dataset,
                                         model_label, on_divergence))
        for d in dims
        for seed in seeds
    ]
    return EvalReport.from_records(_run_cells(cells))


def merge_reports(*reports):
    records = []
    for report in reports:
        records.extend(report.records)
    return EvalReport.from_records(records)

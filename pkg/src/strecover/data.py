"""Partially observed matrices: triplet storage, file I/O, and random splits.

A partially observed matrix keeps an explicit set of known (row, col, value)
entries on an M x N grid. Cells outside the entry set are unknown: lookups
report that instead of returning a default. Splits are seed-deterministic so
every experiment is reproducible from its config alone.
"""

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import DuplicateEntryError, ParameterError, ParseError

TRIPLET_HEADER = ["i", "j", "v"]


def _as_readonly(arr):
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ObservedMatrix:
    """An M x N real matrix with an explicit set of known entries.

    Entries are held in canonical row-major order (sorted by row, then
    column). Instances are immutable and safe to share across threads.
    """

    n_rows: int
    n_cols: int
    row_idx: np.ndarray
    col_idx: np.ndarray
    values: np.ndarray

    @classmethod
    def from_arrays(cls, n_rows, n_cols, row_idx, col_idx, values):
        """Validate and canonicalize raw triplet arrays.

        Raises ParameterError for bad dimensions, out-of-range indices or
        non-finite values, and DuplicateEntryError for repeated cells.
        """
        if n_rows < 1 or n_cols < 1:
            raise ParameterError(f"matrix dimensions must be positive, got {n_rows}x{n_cols}")
        row_idx = np.asarray(row_idx, dtype=np.int64)
        col_idx = np.asarray(col_idx, dtype=np.int64)
        values = np.asarray(values, dtype=np.float64)
        if not (row_idx.shape == col_idx.shape == values.shape) or row_idx.ndim != 1:
            raise ParameterError("triplet arrays must be 1-D and of equal length")
        if row_idx.size:
            if row_idx.min() < 0 or row_idx.max() >= n_rows:
                raise ParameterError(f"row index out of range for {n_rows} rows")
            if col_idx.min() < 0 or col_idx.max() >= n_cols:
                raise ParameterError(f"column index out of range for {n_cols} columns")
            if not np.all(np.isfinite(values)):
                raise ParameterError("entry values must be finite")
        key = row_idx * np.int64(n_cols) + col_idx
        order = np.argsort(key, kind="stable")
        key = key[order]
        if key.size > 1:
            dup = np.nonzero(key[1:] == key[:-1])[0]
            if dup.size:
                i = int(row_idx[order[dup[0]]])
                j = int(col_idx[order[dup[0]]])
                raise DuplicateEntryError(f"duplicate entry at ({i}, {j})")
        return cls(
            n_rows=int(n_rows),
            n_cols=int(n_cols),
            row_idx=_as_readonly(row_idx[order]),
            col_idx=_as_readonly(col_idx[order]),
            values=_as_readonly(values[order]),
        )

    @property
    def n_known(self):
        """Number of known entries."""
        return int(self.values.size)

    def value_at(self, i, j):
        """Value of the known entry at (i, j); raises KeyError if unknown."""
        if not (0 <= i < self.n_rows and 0 <= j < self.n_cols):
            raise ParameterError(f"index ({i}, {j}) outside {self.n_rows}x{self.n_cols}")
        key = np.int64(i) * self.n_cols + np.int64(j)
        keys = self.row_idx * np.int64(self.n_cols) + self.col_idx
        pos = np.searchsorted(keys, key)
        if pos < keys.size and keys[pos] == key:
            return float(self.values[pos])
        raise KeyError(f"entry ({i}, {j}) is unknown")

    def __contains__(self, cell):
        try:
            self.value_at(*cell)
        except KeyError:
            return False
        return True

    def iter_entries(self):
        for i, j, v in zip(self.row_idx, self.col_idx, self.values):
            yield int(i), int(j), float(v)


@dataclass(frozen=True)
class EntrySet:
    """Held-out (row, col, value) triplets used as a test or validation set."""

    row_idx: np.ndarray
    col_idx: np.ndarray
    values: np.ndarray

    def __len__(self):
        return int(self.values.size)

    def iter_entries(self):
        for i, j, v in zip(self.row_idx, self.col_idx, self.values):
            yield int(i), int(j), float(v)


def _parse_field(text, lineno, kind):
    try:
        if kind is int:
            return int(text)
        value = float(text)
    except ValueError:
        raise ParseError(f"line {lineno}: expected a number, got {text!r}") from None
    if not math.isfinite(value):
        raise ParseError(f"line {lineno}: non-finite value {text!r}")
    return value


def load_triplets(path, n_rows=None, n_cols=None):
    """Read a triplet CSV (header ``i,j,v``) into an ObservedMatrix.

    Dimensions default to max observed index + 1 per axis; pass explicit
    ``n_rows``/``n_cols`` (e.g. from a sidecar metadata file) to declare a
    larger grid or to load an empty file.
    """
    ii, jj, vv = [], [], []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != TRIPLET_HEADER:
            raise ParseError(f"line 1: expected header {','.join(TRIPLET_HEADER)!r}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise ParseError(f"line {lineno}: expected 3 fields, got {len(row)}")
            ii.append(_parse_field(row[0], lineno, int))
            jj.append(_parse_field(row[1], lineno, int))
            vv.append(_parse_field(row[2], lineno, float))
    if n_rows is None:
        n_rows = max(ii) + 1 if ii else 0
    if n_cols is None:
        n_cols = max(jj) + 1 if jj else 0
    if n_rows < 1 or n_cols < 1:
        raise ParameterError(
            "matrix dimensions unknown: file has no entries and no explicit dimensions were given"
        )
    return ObservedMatrix.from_arrays(n_rows, n_cols, ii, jj, vv)


def write_triplets(m, path):
    """Write entries as a triplet CSV in canonical order, full float precision."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(",".join(TRIPLET_HEADER) + "\n")
        for i, j, v in zip(m.row_idx, m.col_idx, m.values):
            fh.write(f"{int(i)},{int(j)},{repr(float(v))}\n")


def write_entry_set(entries, path):
    """Write a held-out EntrySet in the same triplet CSV format."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(",".join(TRIPLET_HEADER) + "\n")
        for i, j, v in zip(entries.row_idx, entries.col_idx, entries.values):
            fh.write(f"{int(i)},{int(j)},{repr(float(v))}\n")


def load_sidecar(path):
    """Read a metadata sidecar ``{"rows": M, "cols": N}``."""
    with open(path, encoding="utf-8") as fh:
        meta = json.load(fh)
    try:
        return int(meta["rows"]), int(meta["cols"])
    except (KeyError, TypeError, ValueError):
        raise ParseError(f"{path}: sidecar must contain integer 'rows' and 'cols'") from None


def write_sidecar(n_rows, n_cols, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({"rows": int(n_rows), "cols": int(n_cols)}, fh)
        fh.write("\n")


def _entry_set(m, idx):
    return EntrySet(
        row_idx=_as_readonly(m.row_idx[idx].copy()),
        col_idx=_as_readonly(m.col_idx[idx].copy()),
        values=_as_readonly(m.values[idx].copy()),
    )


def _subset_matrix(m, idx):
    return ObservedMatrix.from_arrays(
        m.n_rows, m.n_cols, m.row_idx[idx], m.col_idx[idx], m.values[idx]
    )


def split_by_sampling_rate(m, rate, seed):
    """Randomly split entries into a training part and a held-out test part.

    The training part receives round-half-up(rate * n_known) entries drawn
    uniformly at random; the remainder becomes the test set. The split is a
    pure function of the seed.
    """
    if not 0.0 < rate <= 1.0:
        raise ParameterError(f"sampling rate must be in (0, 1], got {rate}")
    if m.n_known == 0:
        raise ParameterError("cannot split an empty matrix")
    n = m.n_known
    n_train = int(math.floor(rate * n + 0.5))
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    train_idx = np.sort(perm[:n_train])
    test_idx = np.sort(perm[n_train:])
    return _subset_matrix(m, train_idx), _entry_set(m, test_idx)


def split_half(m, seed):
    """Split entries into ceil(n/2) fitting entries and floor(n/2) validation ones."""
    if m.n_known < 2:
        raise ParameterError("need at least 2 entries to split in half")
    n = m.n_known
    n_fit = (n + 1) // 2
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    fit_idx = np.sort(perm[:n_fit])
    val_idx = np.sort(perm[n_fit:])
    return _subset_matrix(m, fit_idx), _entry_set(m, val_idx)

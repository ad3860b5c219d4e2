"""Contingency tables, probability tables and the restricted coordinates.

Cells are always enumerated column-major, ``(1,1), (2,1), ..., (I,1), (1,2), ...``.
The restricted vector drops the last cell ``(I,J)``, which is recovered as one
minus the sum of the others.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from ._core import crosstab_codes
from .errors import TableError

SUM_TOL = 1e-12
RENORM_TOL = 1e-9


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class JointTable:
    """Observed counts of an I x J contingency table.

    Build with :func:`from_counts`; the constructor does not validate.
    ``pruned_rows`` / ``pruned_cols`` hold the original indices of all-zero
    rows and columns that were dropped.
    """

    counts: np.ndarray
    row_labels: tuple | None = None
    col_labels: tuple | None = None
    pruned_rows: tuple[int, ...] = ()
    pruned_cols: tuple[int, ...] = ()

    @property
    def n(self) -> int:
        return int(self.counts.sum())

    @property
    def shape(self) -> tuple[int, int]:
        return self.counts.shape

    @property
    def row_sums(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def col_sums(self) -> np.ndarray:
        return self.counts.sum(axis=0)


@dataclass(frozen=True)
class ProbTable:
    """A probability mass function on an I x J grid with its marginals."""

    p: np.ndarray
    row_marginals: np.ndarray = field(init=False)
    col_marginals: np.ndarray = field(init=False)

    def __post_init__(self):
        p = np.array(self.p, dtype=float)
        if p.ndim != 2 or p.shape[0] < 1 or p.shape[1] < 1:
            raise TableError(f"probability table must be 2-D, got shape {p.shape}")
        if not np.all(np.isfinite(p)) or np.any(p < 0):
            raise TableError("probabilities must be finite and nonnegative")
        dev = abs(p.sum() - 1.0)
        if dev > RENORM_TOL:
            raise TableError(f"probabilities sum to {p.sum():.12g}, not 1")
        if dev > SUM_TOL:
            p = p / p.sum()
        object.__setattr__(self, "p", _frozen(p))
        object.__setattr__(self, "row_marginals", _frozen(p.sum(axis=1)))
        object.__setattr__(self, "col_marginals", _frozen(p.sum(axis=0)))

    @property
    def shape(self) -> tuple[int, int]:
        return self.p.shape

    def is_interior(self) -> bool:
        return bool(np.all(self.p > 0))


@dataclass(frozen=True)
class RestrictedVector:
    """Column-major cell values with the last cell dropped (length IJ - 1)."""

    values: np.ndarray
    dims: tuple[int, int]

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        i, j = self.dims
        if v.shape != (i * j - 1,):
            raise TableError(f"restricted vector for {i}x{j} needs {i * j - 1} entries, got {v.shape}")
        object.__setattr__(self, "values", _frozen(v))

    def __len__(self):
        return len(self.values)


def from_counts(matrix, row_labels: Sequence | None = None,
                col_labels: Sequence | None = None) -> JointTable:
    """Validate a count matrix, pruning all-zero rows and columns.

    Raises
    ------
    TableError
        If the matrix has a negative or non-integer entry, is empty, or has
        fewer than 2 rows or columns after pruning.
    """
    m = np.asarray(matrix)
    if m.ndim != 2:
        raise TableError(f"counts must be a 2-D matrix, got {m.ndim}-D")
    if m.size and not np.all(np.isfinite(m)):
        raise TableError("counts must be finite")
    if m.size and np.any(m != np.round(m)):
        raise TableError("counts must be integers")
    m = m.astype(np.int64)
    if m.shape[0] < 2 or m.shape[1] < 2:
        raise TableError(f"table must be at least 2x2, got {m.shape[0]}x{m.shape[1]}")
    if np.any(m < 0):
        raise TableError("counts must be nonnegative")
    if m.sum() == 0:
        raise TableError("table is empty (all counts zero)")
    keep_r = m.sum(axis=1) > 0
    keep_c = m.sum(axis=0) > 0
    pruned_r = tuple(int(i) for i in np.flatnonzero(~keep_r))
    pruned_c = tuple(int(j) for j in np.flatnonzero(~keep_c))
    m = m[keep_r][:, keep_c]
    if m.shape[0] < 2 or m.shape[1] < 2:
        raise TableError(
            f"table is {m.shape[0]}x{m.shape[1]} after dropping empty rows/columns; need at least 2x2"
        )
    if row_labels is not None:
        if len(row_labels) != len(keep_r):
            raise TableError("row_labels length does not match the number of rows")
        row_labels = tuple(lab for lab, k in zip(row_labels, keep_r) if k)
    if col_labels is not None:
        if len(col_labels) != len(keep_c):
            raise TableError("col_labels length does not match the number of columns")
        col_labels = tuple(lab for lab, k in zip(col_labels, keep_c) if k)
    return JointTable(_frozen(np.ascontiguousarray(m)), row_labels, col_labels, pruned_r, pruned_c)


def empirical(table: JointTable) -> ProbTable:
    return ProbTable(table.counts / table.n)


def product_of_marginals(p: ProbTable) -> ProbTable:
    return ProbTable(np.outer(p.row_marginals, p.col_marginals))


def vec2(p: ProbTable | np.ndarray) -> RestrictedVector:
    arr = p.p if isinstance(p, ProbTable) else np.asarray(p, dtype=float)
    return RestrictedVector(arr.ravel(order="F")[:-1], arr.shape)


def unvec2(v: RestrictedVector | np.ndarray, dims: tuple[int, int] | None = None) -> np.ndarray:
    """Rebuild the full I x J array, filling the last cell with ``1 - sum``.

    Returns a plain array so callers can probe points off the simplex
    interior; wrap in :class:`ProbTable` to validate.
    """
    if isinstance(v, RestrictedVector):
        values, dims = v.values, v.dims
    else:
        values = np.asarray(v, dtype=float)
    if dims is None:
        raise TableError("dims required for a bare array")
    full = np.append(values, 1.0 - values.sum())
    return full.reshape(dims, order="F")


def crosstab(xs: Sequence, ys: Sequence) -> JointTable:
    """Count co-occurrences of two categorical sequences (labels sorted)."""
    if len(xs) != len(ys):
        raise TableError("x and y must have the same length")
    xl, xc = np.unique(np.asarray(xs), return_inverse=True)
    yl, yc = np.unique(np.asarray(ys), return_inverse=True)
    counts = crosstab_codes(xc.astype(np.int64).ravel(), yc.astype(np.int64).ravel(), len(xl), len(yl))
    return from_counts(counts, row_labels=[str(v) for v in xl], col_labels=[str(v) for v in yl])


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def _read_rows(path) -> list[list[str]]:
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            rows = [[c.strip() for c in r] for r in csv.reader(fh)]
    except OSError as exc:
        raise TableError(f"cannot read {path}: {exc.strerror}") from exc
    return [r for r in rows if r and any(r)]


def read_counts_csv(path) -> JointTable:
    """Read an integer count matrix, one table row per line.

    A first line containing any non-numeric field is taken as a header of
    column labels.
    """
    rows = _read_rows(path)
    if not rows:
        raise TableError(f"{path}: no data")
    col_labels = None
    if not all(_is_number(c) for c in rows[0]):
        col_labels, rows = rows[0], rows[1:]
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise TableError(f"{path}: rows have differing numbers of fields {sorted(widths)}")
    try:
        m = np.array([[float(c) for c in r] for r in rows])
    except ValueError as exc:
        raise TableError(f"{path}: non-numeric count ({exc})") from exc
    if col_labels is not None and len(col_labels) != m.shape[1]:
        raise TableError(f"{path}: header has {len(col_labels)} fields but rows have {m.shape[1]}")
    return from_counts(m, col_labels=col_labels)


def read_pairs_csv(path, header: bool | None = None) -> tuple[list, list, bool]:
    """Read two-column ``x,y`` observations.

    With ``header=None`` the first line is a header when, in some column, it
    is non-numeric while every later line is numeric. Purely categorical
    files therefore need ``header=True`` if they carry one.

    Returns ``(xs, ys, numeric)``; ``numeric`` is true when every value in
    both columns parses as a float, in which case the values are floats.
    """
    rows = _read_rows(path)
    bad = [k for k, r in enumerate(rows) if len(r) != 2]
    if bad:
        raise TableError(f"{path}: line {bad[0] + 1} does not have exactly two fields")
    if header is None:
        header = len(rows) > 1 and any(
            not _is_number(rows[0][c]) and all(_is_number(r[c]) for r in rows[1:]) for c in (0, 1)
        )
    if header:
        rows = rows[1:]
    if not rows:
        raise TableError(f"{path}: no data")
    xs = [r[0] for r in rows]
    ys = [r[1] for r in rows]
    numeric = all(_is_number(v) for v in xs) and all(_is_number(v) for v in ys)
    if numeric:
        xs = [float(v) for v in xs]
        ys = [float(v) for v in ys]
    return xs, ys, numeric

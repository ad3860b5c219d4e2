"""Discretize paired continuous observations into a contingency table."""

from __future__ import annotations

import math
import warnings as _warnings
from dataclasses import dataclass

import numpy as np

from ._core import crosstab_codes
from .errors import BinningError, TableError
from .table import JointTable, from_counts

RULES = ("sqrt", "rice", "fixed")
STRATEGIES = ("equal_width", "equal_frequency")


@dataclass(frozen=True)
class BinningSpec:
    """How to partition each axis.

    ``rule`` is ``"sqrt"``, ``"rice"`` or ``"fixed"`` (then ``kx``/``ky`` are
    required). ``ranges`` optionally fixes ``((xmin, xmax), (ymin, ymax))`` for
    equal-width bins.
    """

    rule: str = "rice"
    strategy: str = "equal_frequency"
    kx: int | None = None
    ky: int | None = None
    ranges: tuple | None = None

    def __post_init__(self):
        if self.rule not in RULES:
            raise BinningError(f"unknown rule {self.rule!r}; choose from {', '.join(RULES)}")
        if self.strategy not in STRATEGIES:
            raise BinningError(f"unknown strategy {self.strategy!r}; choose from {', '.join(STRATEGIES)}")
        if self.rule == "fixed" and (self.kx is None or self.ky is None):
            raise BinningError("fixed rule needs kx and ky")
        for k in (self.kx, self.ky):
            if k is not None and k < 2:
                raise BinningError(f"bin counts must be at least 2, got {k}")

    @classmethod
    def parse(cls, rule: str, strategy: str = "equal_frequency") -> "BinningSpec":
        """Build from CLI-style strings: ``sqrt``, ``rice`` or ``fixed:KX:KY``;
        strategy ``width``/``freq`` or the full names."""
        strategy = {"width": "equal_width", "freq": "equal_frequency"}.get(strategy, strategy)
        if rule.startswith("fixed"):
            parts = rule.split(":")
            if len(parts) != 3:
                raise BinningError(f"fixed rule must look like fixed:KX:KY, got {rule!r}")
            try:
                kx, ky = int(parts[1]), int(parts[2])
            except ValueError:
                raise BinningError(f"fixed rule must look like fixed:KX:KY, got {rule!r}") from None
            return cls("fixed", strategy, kx, ky)
        return cls(rule, strategy)

    def bins(self, n: int) -> tuple[int, int]:
        if self.rule == "fixed":
            return self.kx, self.ky
        k = bin_count_rule(n, self.rule)
        return k, k


def bin_count_rule(n: int, rule: str) -> int:
    """``ceil(sqrt(n))`` or ``ceil(2 n^(1/3))``, at least 2; exact integer arithmetic."""
    if n < 4:
        raise BinningError(f"need at least 4 observations, got {n}")
    if rule == "sqrt":
        k = math.isqrt(n - 1) + 1
    elif rule == "rice":
        # smallest k with k^3 >= 8n, i.e. k >= 2 n^(1/3)
        k = max(1, round(2 * n ** (1 / 3)) - 1)
        while k**3 < 8 * n:
            k += 1
    else:
        raise BinningError(f"unknown rule {rule!r}; choose sqrt or rice")
    return max(k, 2)


def _width_codes(v: np.ndarray, k: int, lo: float, hi: float) -> np.ndarray:
    if not hi > lo:
        raise BinningError("axis has zero range; cannot form two bins")
    edges = np.linspace(lo, hi, k + 1)
    # bins are [e_i, e_{i+1}); the last one also takes e_k
    codes = np.searchsorted(edges, v, side="right") - 1
    codes[v == hi] = k - 1
    if np.any((codes < 0) | (codes >= k)):
        raise BinningError("observations fall outside the given range")
    return codes


def _freq_codes(v: np.ndarray, k: int, axis: str, notes: list) -> np.ndarray:
    # edges are order statistics, so every bin [e_i, e_{i+1}) holds e_i itself
    edges = np.unique(np.quantile(v, np.linspace(0, 1, k + 1), method="inverted_cdf"))
    if edges.size - 1 < k:
        notes.append(f"{axis}: tied quantile edges merged, {k} bins reduced to {max(edges.size - 1, 1)}")
    if edges.size < 3:
        raise BinningError(f"{axis}: too few distinct values for two bins")
    return np.searchsorted(edges[1:-1], v, side="right")


def discretize(pairs, spec: BinningSpec | None = None, return_notes: bool = False):
    """Count paired observations on a ``kx x ky`` grid.

    ``pairs`` is an ``(n, 2)`` array-like or a pair of equal-length
    sequences ``(xs, ys)``. Empty rows/columns are pruned by
    :func:`~mitest.table.from_counts`. Tied equal-frequency edges are merged
    with a warning.
    """
    spec = spec or BinningSpec()
    arr = np.asarray(pairs, dtype=float)
    if arr.ndim == 2 and arr.shape[0] == 2 and arr.shape[1] != 2:
        arr = arr.T
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise BinningError("pairs must be an (n, 2) array")
    if arr.shape[0] < 4:
        raise BinningError(f"need at least 4 pairs, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise BinningError("pairs must be finite")
    kx, ky = spec.bins(arr.shape[0])
    notes: list[str] = []
    codes = []
    for axis, k, col in (("x", kx, arr[:, 0]), ("y", ky, arr[:, 1])):
        if spec.strategy == "equal_width":
            lo, hi = spec.ranges[0 if axis == "x" else 1] if spec.ranges else (col.min(), col.max())
            codes.append(_width_codes(col, k, float(lo), float(hi)))
        else:
            codes.append(_freq_codes(col, k, axis, notes))
    for msg in notes:
        _warnings.warn(msg, stacklevel=2)
    counts = crosstab_codes(codes[0].astype(np.int64), codes[1].astype(np.int64),
                            int(codes[0].max()) + 1, int(codes[1].max()) + 1)
    try:
        table = from_counts(counts)
    except TableError as exc:
        raise BinningError(str(exc)) from exc
    return (table, notes) if return_notes else table

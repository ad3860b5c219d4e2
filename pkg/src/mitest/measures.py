"""Point measures on probability tables and the classical count statistics.

All logarithms are natural, so MI and entropies are in nats. Cells with zero
probability contribute nothing (``0 ln 0 = 0``). Sums run over cells in
column-major order.
"""

from __future__ import annotations

import numpy as np

from ._core import g2_counts, pearson_counts
from .errors import TableError
from .table import JointTable, ProbTable


def _colmajor(a: np.ndarray) -> np.ndarray:
    return np.asarray(a).ravel(order="F")


def mutual_information(p: ProbTable) -> float:
    """MI of a joint pmf: ``sum p_ij ln(p_ij / (p_i* p_*j))`` over positive cells."""
    ni, nj = p.shape
    joint = _colmajor(p.p)
    rows = np.tile(p.row_marginals, nj)
    cols = np.repeat(p.col_marginals, ni)
    pos = joint > 0
    # difference of logs: the product of two tiny marginals can underflow
    terms = joint[pos] * (np.log(joint[pos]) - np.log(rows[pos]) - np.log(cols[pos]))
    mi = float(np.sum(terms))
    # only rounding can push the sum below zero
    return max(mi, 0.0)


def joint_entropy(p: ProbTable) -> float:
    joint = _colmajor(p.p)
    pos = joint > 0
    return max(float(-np.sum(joint[pos] * np.log(joint[pos]))), 0.0)


def marginal_entropies(p: ProbTable) -> tuple[float, float]:
    out = []
    for m in (p.row_marginals, p.col_marginals):
        m = m[m > 0]
        out.append(max(float(-np.sum(m * np.log(m))), 0.0))
    return out[0], out[1]


def normalized_mutual_information(p: ProbTable) -> float:
    """MI divided by the joint entropy; lies in [0, 1].

    Raises
    ------
    TableError
        If the joint entropy is zero (all mass on one cell).
    """
    h = joint_entropy(p)
    if h <= 0:
        raise TableError("joint entropy is zero; NMI undefined for a one-cell distribution")
    return mutual_information(p) / h


def g2(t: JointTable) -> float:
    """Likelihood-ratio statistic ``2 sum n_ij ln(n_ij n / (n_i* n_*j))``."""
    return float(g2_counts(np.ascontiguousarray(t.counts, dtype=np.int64)))


def pearson_chi2(t: JointTable) -> float:
    """Pearson's chi-square statistic against the product of sample marginals."""
    try:
        return float(pearson_counts(np.ascontiguousarray(t.counts, dtype=np.int64)))
    except ZeroDivisionError as exc:
        raise TableError("Pearson chi-square needs every expected count to be positive") from exc

"""Derivatives of mutual information in restricted coordinates.

MI is treated as a function of the ``IJ - 1`` free cells (column-major, last
cell eliminated through ``p_IJ = 1 - sum``). The analytic gradient and Hessian
are checked against :func:`fd_derivatives`, which also serves any other
measure of a :class:`~mitest.table.ProbTable`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import TableError, ZeroCellError
from .table import ProbTable, RestrictedVector, unvec2, vec2

GRAD_STEP = 1e-5
HESS_STEP = 1e-4
# Hessian step relative to the smallest cell when extrapolating
RICHARDSON_HESS_FRACTION = 0.005
NEAR_SINGULAR_COND = 1e12
NEAR_SINGULAR_EIG = 1e-12


@dataclass(frozen=True)
class Gradient:
    g: RestrictedVector
    at: ProbTable

    @property
    def values(self) -> np.ndarray:
        return self.g.values


@dataclass(frozen=True)
class HessianMatrix:
    """Symmetrized Hessian; ``asymmetry`` is max|H - H^T| before symmetrizing."""

    h: np.ndarray
    dims: tuple[int, int]
    at: ProbTable | None = None
    asymmetry: float = 0.0


@dataclass(frozen=True)
class CovarianceMatrix:
    """Restricted multinomial covariance with its 2-norm condition number and
    smallest eigenvalue."""

    sigma: np.ndarray
    condition: float
    min_eigenvalue: float = float("nan")

    @property
    def near_singular(self) -> bool:
        return (not np.isfinite(self.condition) or self.condition > NEAR_SINGULAR_COND
                or self.min_eigenvalue < NEAR_SINGULAR_EIG)


def _require_interior(p: ProbTable, what: str) -> None:
    if not p.is_interior():
        raise ZeroCellError(f"{what} requires every cell probability to be positive")


def _log_ratio(p: ProbTable) -> np.ndarray:
    """ln(p_ij / (p_i* p_*j)) as an I x J array."""
    return np.log(p.p) - np.log(p.row_marginals)[:, None] - np.log(p.col_marginals)[None, :]


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def mi_gradient(p: ProbTable) -> Gradient:
    """Gradient of restricted MI: ``l_ij - l_IJ`` for every free cell."""
    _require_interior(p, "mi_gradient")
    ell = _log_ratio(p).ravel(order="F")
    return Gradient(RestrictedVector(ell[:-1] - ell[-1], p.shape), p)


def _unrestricted_hessian(p: ProbTable) -> np.ndarray:
    """Second derivatives of MI over all IJ cells, ignoring the sum constraint.

    Entry ``(ij, st)`` is ``[ij == st]/p_ij - [i == s]/p_i* - [j == t]/p_*j``.
    """
    ni, nj = p.shape
    rows = np.tile(np.arange(ni), nj)
    cols = np.repeat(np.arange(nj), ni)
    same_row = rows[:, None] == rows[None, :]
    same_col = cols[:, None] == cols[None, :]
    a = -(same_row / p.row_marginals[rows][:, None] + same_col / p.col_marginals[cols][:, None])
    a[np.diag_indices_from(a)] += 1.0 / p.p.ravel(order="F")
    return a


def _last_cell_correction(p: ProbTable) -> np.ndarray:
    """Derivative of ``-l_IJ`` with respect to each free cell ``(s, t)``."""
    ni, nj = p.shape
    last_row, last_col = p.row_marginals[-1], p.col_marginals[-1]
    inv_last = 1.0 / p.p[-1, -1]
    a = np.full((ni, nj), inv_last - 1.0 / last_row - 1.0 / last_col)
    a[-1, :] = inv_last - 1.0 / last_col
    a[:, -1] = inv_last - 1.0 / last_row
    return a.ravel(order="F")[:-1]


def mi_hessian(p: ProbTable) -> HessianMatrix:
    """Hessian of restricted MI, ``A M + 1 a^T``, symmetrized.

    ``A`` is the unrestricted Hessian without its last row, ``M`` the identity
    stacked over a row of -1 (the chain rule for the eliminated cell) and ``a``
    the derivative of ``-l_IJ``.
    """
    _require_interior(p, "mi_hessian")
    full = _unrestricted_hessian(p)
    k = full.shape[0] - 1
    restrict = np.vstack([np.eye(k), -np.ones((1, k))])
    h = full[:-1, :] @ restrict + _last_cell_correction(p)[None, :]
    asym = float(np.max(np.abs(h - h.T))) if k else 0.0
    return HessianMatrix(_readonly((h + h.T) / 2.0), p.shape, p, asym)


def multinomial_cov(p: ProbTable) -> CovarianceMatrix:
    """Covariance ``diag(q) - q q^T`` of the restricted empirical vector (per observation)."""
    _require_interior(p, "multinomial_cov")
    q = vec2(p).values
    sigma = np.diag(q) - np.outer(q, q)
    eig = np.linalg.eigvalsh(sigma)
    cond = float(eig[-1] / eig[0]) if eig[0] > 0 else float("inf")
    return CovarianceMatrix(_readonly(sigma), cond, float(eig[0]))


def _central(f, q0: np.ndarray, h: float, hessian: bool):
    k = q0.size
    eye = np.eye(k) * h
    plus = np.array([f(q0 + eye[a]) for a in range(k)])
    minus = np.array([f(q0 - eye[a]) for a in range(k)])
    if not hessian:
        return (plus - minus) / (2 * h)
    f0 = f(q0)
    hess = np.diag((plus - 2 * f0 + minus) / h**2)
    for a in range(k):
        for b in range(a + 1, k):
            v = (f(q0 + eye[a] + eye[b]) - f(q0 + eye[a] - eye[b])
                 - f(q0 - eye[a] + eye[b]) + f(q0 - eye[a] - eye[b])) / (4 * h**2)
            hess[a, b] = hess[b, a] = v
    return hess


def fd_derivatives(measure: Callable[[ProbTable], float], p: ProbTable,
                   step: float | None = None, hess_step: float | None = None,
                   richardson: bool = True) -> tuple[Gradient, HessianMatrix]:
    """Central finite-difference gradient and Hessian of ``measure`` at ``p``.

    Perturbations act on the free cells; the last cell absorbs minus their
    sum, so every probe stays on the simplex. With ``richardson`` the step-``h``
    and step-``h/2`` estimates are combined, raising the truncation order from
    ``h**2`` to ``h**4``; the Hessian step then defaults to ``0.005 * min(p)``,
    large enough to keep rounding error out of small entries. Without it the
    defaults are 1e-4 (Hessian) and, in both modes, 1e-5 for the gradient, each
    capped at a tenth of the smallest cell.

    Raises
    ------
    TableError
        If a probe would leave the simplex interior.
    """
    dims = p.shape
    q0 = vec2(p).values
    pmin = float(p.p.min())
    if step is None:
        step = min(GRAD_STEP, pmin / 10.0)
    if hess_step is None:
        hess_step = RICHARDSON_HESS_FRACTION * pmin if richardson else min(HESS_STEP, pmin / 10.0)
    # a mixed Hessian probe moves the last cell by up to 2 * hess_step
    if pmin <= 2 * max(step, hess_step):
        raise TableError(f"step too large for smallest cell {pmin:.3g}; probes leave the simplex")

    def f(q):
        return float(measure(ProbTable(unvec2(q, dims))))

    grad = _central(f, q0, step, False)
    hess = _central(f, q0, hess_step, True)
    if richardson:
        grad = (4 * _central(f, q0, step / 2, False) - grad) / 3
        hess = (4 * _central(f, q0, hess_step / 2, True) - hess) / 3
    return (Gradient(RestrictedVector(grad, dims), p),
            HessianMatrix(_readonly(hess), dims, p, 0.0))

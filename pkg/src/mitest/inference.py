"""MI-based independence statistics and the test driver."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import chi2

from .calculus import mi_hessian
from .errors import MITestError
from .measures import g2, mutual_information, pearson_chi2
from .nulldist import MC_DRAWS, SERIES_TOL, ChiBarWeights, null_weights, pvalue_details
from .table import JointTable, ProbTable, empirical, product_of_marginals, vec2

STATISTICS = ("t1", "t2", "pearson", "g2")
METHODS = ("series", "mc", "classical")
SPARSE_RATIO = 5.0


def t1_statistic(t: JointTable) -> float:
    """``2 n MI(p_hat)``; equal to the likelihood-ratio statistic G^2."""
    return 2.0 * t.n * mutual_information(empirical(t))


def t2_statistic(t: JointTable) -> float:
    """Quadratic form ``n d^T H d`` with ``H`` the MI Hessian at the product of
    the sample marginals and ``d`` the restricted deviation from it."""
    p_hat = empirical(t)
    p0 = product_of_marginals(p_hat)
    d = vec2(p_hat).values - vec2(p0).values
    h = mi_hessian(p0).h
    return max(float(t.n * d @ h @ d), 0.0)


_STAT_FUNCS = {"t1": t1_statistic, "t2": t2_statistic, "pearson": pearson_chi2, "g2": g2}


def statistic(t: JointTable, stat: str) -> float:
    try:
        return _STAT_FUNCS[stat](t)
    except KeyError:
        raise MITestError(f"unknown statistic {stat!r}; choose from {', '.join(STATISTICS)}") from None


def default_method(stat: str) -> str:
    return "series" if stat in ("t1", "g2") else "classical"


def _method(method: str | None, stat: str) -> str:
    if method is None:
        return default_method(stat)
    if method == "classical_dof":
        return "classical"
    if method not in METHODS:
        raise MITestError(f"unknown p-value method {method!r}; choose from {', '.join(METHODS)}")
    return method


@dataclass(frozen=True)
class TestResult:
    """Outcome of one independence test. ``reject`` is ``p_value < alpha``."""

    __test__ = False  # keep pytest from collecting this class

    statistic_name: str
    value: float
    p_value: float
    alpha: float
    method: str
    n: int
    dims: tuple[int, int]
    weights: ChiBarWeights | None = None
    dof: int | None = None
    warnings: tuple[str, ...] = field(default=())

    @property
    def reject(self) -> bool:
        return self.p_value < self.alpha

    @property
    def weights_or_dof(self):
        return self.weights if self.weights is not None else self.dof

    def to_dict(self) -> dict:
        return {
            "statistic_name": self.statistic_name,
            "value": self.value,
            "p_value": self.p_value,
            "alpha": self.alpha,
            "reject": self.reject,
            "method": self.method,
            "n": self.n,
            "dims": list(self.dims),
            "dof": self.dof,
            "weights": None if self.weights is None else [float(v) for v in self.weights.lambdas],
            "warnings": list(self.warnings),
        }


def independence_test(t: JointTable, stat: str = "t2", alpha: float = 0.05,
                      method: str | None = None, seed: int | None = None,
                      mc_draws: int = MC_DRAWS, null_marginals=None,
                      tol: float = SERIES_TOL) -> TestResult:
    """Test independence of the row and column variables of ``t``.

    Parameters
    ----------
    stat : {"t1", "t2", "pearson", "g2"}
    method : {"series", "mc", "classical"} or None
        ``series`` and ``mc`` refer the statistic to the weighted chi-square
        law whose weights come from the Hessian and covariance at the product
        of the sample marginals (or of ``null_marginals`` when given).
        ``classical`` uses chi-square with ``(I-1)(J-1)`` degrees of freedom.
        None picks ``classical`` for t2/pearson and ``series`` for t1/g2.
    null_marginals : pair of arrays, optional
        Known row and column marginals, for simulation studies.
    """
    if not 0 < alpha < 1:
        raise MITestError(f"alpha must lie in (0, 1), got {alpha}")
    method = _method(method, stat)
    value = statistic(t, stat)
    ni, nj = t.shape
    warnings = []
    if t.n / (ni * nj) < SPARSE_RATIO:
        warnings.append(
            f"n/(IJ) = {t.n / (ni * nj):.3g} < {SPARSE_RATIO:g}; chi-square approximation may be poor")
    if t.pruned_rows or t.pruned_cols:
        warnings.append(f"dropped empty rows {list(t.pruned_rows)} and columns {list(t.pruned_cols)}")

    if method == "classical":
        dof = (ni - 1) * (nj - 1)
        return TestResult(stat, value, float(chi2.sf(value, dof)), alpha, "classical",
                          t.n, t.shape, dof=dof, warnings=tuple(warnings))

    if null_marginals is not None:
        rows, cols = (np.asarray(m, dtype=float) for m in null_marginals)
        if rows.shape != (ni,) or cols.shape != (nj,):
            raise MITestError("null marginals do not match the table dimensions")
        p0 = ProbTable(np.outer(rows, cols))
    else:
        p0 = product_of_marginals(empirical(t))
    w = null_weights(p0)
    pv = pvalue_details(w, value, method, seed, mc_draws, tol)
    if pv.note:
        warnings.append(pv.note)
    return TestResult(stat, value, pv.value, alpha, pv.method, t.n, t.shape,
                      weights=w, warnings=tuple(warnings))

"""Weighted chi-square null distribution ``sum_k lambda_k chi2_1``.

The weights are the spectrum of the MI Hessian in the metric of the
multinomial covariance. The CDF is evaluated with Moschopoulos' gamma series
(each group of equal weights is one gamma variable) or by Monte Carlo, which
also covers weight vectors with negative entries.
"""

from __future__ import annotations

import hashlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np
from scipy.optimize import brentq
from scipy.special import gammainc, gammaincc

from ._core import gamma_series_weights
from .calculus import CovarianceMatrix, HessianMatrix, mi_hessian, multinomial_cov
from .errors import MITestError, NegativeWeightError, SeriesConvergenceError, TableError
from .table import ProbTable

ZERO_TOL = 1e-10
GROUP_RTOL = 1e-9
SERIES_TOL = 1e-10
MAX_TERMS = 100_000
MC_DRAWS = 200_000
MC_BLOCK = 65_536
FALLBACK_SEED = 0


@dataclass(frozen=True)
class ChiBarWeights:
    """Nonincreasing weights of a weighted chi-square law.

    Entries smaller than ``zero_tol`` in magnitude are stored as exact zeros.
    ``trace`` is ``tr(H Sigma)`` when the weights came from matrices.
    """

    lambdas: np.ndarray
    zero_tol: float = ZERO_TOL
    source: dict | None = None
    trace: float | None = None

    def __post_init__(self):
        lam = np.sort(np.asarray(self.lambdas, dtype=float).ravel())[::-1].copy()
        if lam.size == 0 or not np.all(np.isfinite(lam)):
            raise MITestError("weights must be a nonempty vector of finite numbers")
        lam[np.abs(lam) < self.zero_tol] = 0.0
        lam.setflags(write=False)
        object.__setattr__(self, "lambdas", lam)

    @property
    def has_negative(self) -> bool:
        return bool(self.lambdas[-1] < 0)

    @property
    def mean(self) -> float:
        return float(self.lambdas.sum())

    @property
    def variance(self) -> float:
        return float(2.0 * np.sum(self.lambdas**2))

    def groups(self, rtol: float = GROUP_RTOL) -> tuple[tuple[float, int], ...]:
        """Positive weights merged into ``(weight, multiplicity)`` pairs."""
        out: list[list] = []
        for lam in self.lambdas[self.lambdas > 0]:
            if out and abs(out[-1][0] - lam) <= rtol * out[-1][0]:
                out[-1][1] += 1
            else:
                out.append([float(lam), 1])
        return tuple((lam, m) for lam, m in out)

    def unit_dof(self, atol: float = 1e-8) -> int | None:
        """Number of unit weights when all others are zero, else None."""
        lam = self.lambdas
        ones = np.abs(lam - 1.0) <= atol
        if np.all(ones | (lam == 0)):
            return int(ones.sum())
        return None


def _table_hash(p: ProbTable) -> str:
    return hashlib.sha1(np.ascontiguousarray(p.p).tobytes()).hexdigest()[:16]


def chi_bar_weights(h, sigma, zero_tol: float = ZERO_TOL) -> ChiBarWeights:
    """Eigenvalues of ``L^T H L`` with ``L L^T = Sigma``.

    ``h`` and ``sigma`` may be :class:`HessianMatrix` /
    :class:`CovarianceMatrix` or plain square arrays.

    Raises
    ------
    TableError
        If ``sigma`` is not positive definite.
    """
    hm = np.asarray(h.h if isinstance(h, HessianMatrix) else h, dtype=float)
    sm = np.asarray(sigma.sigma if isinstance(sigma, CovarianceMatrix) else sigma, dtype=float)
    if hm.shape != sm.shape or hm.ndim != 2 or hm.shape[0] != hm.shape[1]:
        raise MITestError(f"Hessian {hm.shape} and covariance {sm.shape} must be equal square matrices")
    try:
        chol = np.linalg.cholesky(sm)
    except np.linalg.LinAlgError as exc:
        raise TableError("covariance matrix is not positive definite (zero cell upstream?)") from exc
    m = chol.T @ hm @ chol
    lam = np.linalg.eigvalsh((m + m.T) / 2.0)
    source = None
    at = getattr(h, "at", None)
    if at is not None:
        source = {"dims": list(at.shape), "table_hash": _table_hash(at)}
    return ChiBarWeights(lam, zero_tol, source, float(np.trace(hm @ sm)))


def null_weights(p: ProbTable, zero_tol: float = ZERO_TOL) -> ChiBarWeights:
    """Weights of the limiting law of ``2n MI`` when sampling from ``p``."""
    return chi_bar_weights(mi_hessian(p), multinomial_cov(p), zero_tol)


# -- gamma series -------------------------------------------------------------

@dataclass(frozen=True)
class _Series:
    shape: float
    scale: float
    coef: np.ndarray
    remainder: float
    converged: bool


@lru_cache(maxsize=512)
def _series(groups: tuple[tuple[float, int], ...], tol: float, max_terms: int) -> _Series:
    alphas = np.array([m / 2.0 for _, m in groups])
    scales = np.array([2.0 * lam for lam, _ in groups])
    beta1 = float(scales.min())
    log_c = float(np.sum(alphas * np.log(beta1 / scales)))
    if log_c < -700:
        raise SeriesConvergenceError("weights too spread for the gamma series (leading constant underflows)")
    ratios = np.ascontiguousarray(1.0 - beta1 / scales)
    coef, remainder, converged = gamma_series_weights(
        np.ascontiguousarray(alphas), ratios, log_c, tol, max_terms)
    coef = np.asarray(coef)
    coef.setflags(write=False)
    return _Series(float(alphas.sum()), beta1, coef, float(remainder), bool(converged))


def _check_series(w: ChiBarWeights, tol: float, max_terms: int) -> _Series:
    if not 0 < tol <= 1e-3:
        raise MITestError(f"series tolerance must lie in (0, 1e-3], got {tol}")
    if w.has_negative:
        raise NegativeWeightError("gamma series needs nonnegative weights; use Monte Carlo")
    groups = w.groups()
    if not groups:
        raise MITestError("all weights are zero")
    s = _series(groups, float(tol), int(max_terms))
    if not s.converged:
        raise SeriesConvergenceError(
            f"gamma series not within {tol:g} after {max_terms} terms (remaining mass {s.remainder:.3g})")
    return s


def _series_sum(s: _Series, x: np.ndarray, fn) -> np.ndarray:
    z = np.maximum(x, 0.0) / s.scale
    shapes = s.shape + np.arange(s.coef.size)
    out = np.empty(z.size)
    # bound the temporary at ~4M entries
    chunk = max(1, 4_000_000 // s.coef.size)
    for lo in range(0, z.size, chunk):
        zz = z[lo:lo + chunk]
        out[lo:lo + chunk] = fn(shapes[None, :], zz[:, None]) @ s.coef
    return out


def _shape_like(x, values):
    return float(values[0]) if np.ndim(x) == 0 else values.reshape(np.shape(x))


def cdf(w: ChiBarWeights, x, tol: float = SERIES_TOL, max_terms: int = MAX_TERMS):
    """``P(sum lambda_k chi2_1 <= x)`` by the gamma series, absolute error <= tol.

    Raises
    ------
    NegativeWeightError
        If any weight is negative.
    SeriesConvergenceError
        If ``max_terms`` terms do not reach ``tol``.
    """
    s = _check_series(w, tol, max_terms)
    xa = np.atleast_1d(np.asarray(x, dtype=float)).ravel()
    vals = np.clip(_series_sum(s, xa, gammainc), 0.0, 1.0)
    vals[xa <= 0] = 0.0
    return _shape_like(x, vals)


def sf(w: ChiBarWeights, x, tol: float = SERIES_TOL, max_terms: int = MAX_TERMS):
    """Upper tail ``1 - cdf`` computed without cancellation."""
    s = _check_series(w, tol, max_terms)
    xa = np.atleast_1d(np.asarray(x, dtype=float)).ravel()
    vals = np.clip(_series_sum(s, xa, gammaincc) + s.remainder, 0.0, 1.0)
    vals[xa <= 0] = 1.0
    return _shape_like(x, vals)


# -- Monte Carlo --------------------------------------------------------------

def _block(lam: np.ndarray, seed: int, b: int, size: int) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(b,)))
    z = rng.standard_normal((size, lam.size))
    return (z * z) @ lam


def sample(w: ChiBarWeights, m: int, seed: int, workers: int = 1) -> np.ndarray:
    """``m`` draws of ``sum lambda_k Z_k^2``.

    Draws are generated in fixed blocks, each from its own seed derived from
    ``(seed, block index)``, so the output does not depend on ``workers``.
    """
    if m < 1:
        raise MITestError("number of draws must be at least 1")
    lam = w.lambdas[w.lambdas != 0]
    if lam.size == 0:
        return np.zeros(m)
    sizes = [min(MC_BLOCK, m - lo) for lo in range(0, m, MC_BLOCK)]
    if workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(workers) as ex:
            parts = list(ex.map(lambda b: _block(lam, seed, b, sizes[b]), range(len(sizes))))
    else:
        parts = [_block(lam, seed, b, sz) for b, sz in enumerate(sizes)]
    return np.concatenate(parts)


# -- quantiles and p-values ---------------------------------------------------

class PValue(NamedTuple):
    value: float
    method: str
    note: str | None = None


def _resolve(w: ChiBarWeights, method: str, seed: int | None) -> str:
    if method not in ("series", "mc"):
        raise MITestError(f"method must be 'series' or 'mc', got {method!r}")
    if method == "mc" and seed is None:
        raise MITestError("Monte Carlo needs an explicit seed")
    if method == "series" and w.has_negative:
        if seed is None:
            raise NegativeWeightError("negative weights need Monte Carlo, which needs a seed")
        return "mc"
    return method


def quantile(w: ChiBarWeights, level: float, method: str = "series", seed: int | None = None,
             draws: int = MC_DRAWS, tol: float = SERIES_TOL) -> float:
    """Value ``q`` with ``P(chi2_lambda <= q) = level``."""
    if not 0 < level < 1:
        raise MITestError(f"level must lie in (0, 1), got {level}")
    method = _resolve(w, method, seed)
    if method == "mc":
        return float(np.quantile(sample(w, max(draws, MC_DRAWS), seed), level))
    _check_series(w, tol, MAX_TERMS)
    hi = w.mean + 10.0 * np.sqrt(w.variance)
    while cdf(w, hi, tol) < level:
        hi *= 2.0
    return float(brentq(lambda x: cdf(w, x, tol) - level, 0.0, hi, xtol=1e-12, rtol=1e-14))


def pvalue_details(w: ChiBarWeights, t: float, method: str = "series", seed: int | None = None,
                   draws: int = MC_DRAWS, tol: float = SERIES_TOL) -> PValue:
    """P-value with the method actually used.

    A series that does not converge falls back to Monte Carlo (with seed 0
    when none is given); the note records it.
    """
    if not t >= 0:
        raise MITestError(f"statistic must be nonnegative, got {t}")
    method = _resolve(w, method, seed)
    note = None
    if method == "series":
        if t == 0:
            return PValue(1.0, "series")
        try:
            return PValue(float(sf(w, t, tol)), "series")
        except SeriesConvergenceError as exc:
            note = f"series fallback to Monte Carlo: {exc}"
            seed = FALLBACK_SEED if seed is None else seed
    draws_ = sample(w, draws, seed)
    count = int(np.count_nonzero(draws_ >= t))
    return PValue((count + 1) / (draws + 1), "mc", note)


def pvalue(w: ChiBarWeights, t: float, method: str = "series", seed: int | None = None,
           draws: int = MC_DRAWS, tol: float = SERIES_TOL) -> float:
    return pvalue_details(w, t, method, seed, draws, tol).value

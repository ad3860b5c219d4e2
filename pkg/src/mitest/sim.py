"""Replicate studies under independence and simple dependent alternatives.

Every replicate draws from its own generator seeded by ``(seed, rep_index)``,
so results are identical for any number of worker processes.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.stats import binom, ks_2samp

from ._core import crosstab_codes
from .errors import MITestError
from .inference import STATISTICS, independence_test, statistic
from .measures import mutual_information
from .nulldist import ChiBarWeights, cdf, sample
from .table import JointTable, ProbTable, from_counts

MAX_RESAMPLES = 1000
KS_MIN_SAMPLES = 100
KS_MC_DRAWS = 1_000_000


@dataclass(frozen=True)
class Distribution:
    """A finite distribution on ``{0, ..., k-1}``."""

    name: str
    pmf: np.ndarray

    def __post_init__(self):
        pmf = np.asarray(self.pmf, dtype=float)
        if pmf.ndim != 1 or pmf.size < 2:
            raise MITestError(f"{self.name}: need at least two categories")
        if np.any(pmf <= 0) or abs(pmf.sum() - 1) > 1e-9:
            raise MITestError(f"{self.name}: probabilities must be positive and sum to 1")
        pmf = pmf / pmf.sum()
        pmf.setflags(write=False)
        object.__setattr__(self, "pmf", pmf)

    @property
    def k(self) -> int:
        return self.pmf.size


def uniform(k: int) -> Distribution:
    return Distribution(f"uniform:{k}", np.full(k, 1.0 / k))


def binomial(m: int, q: float) -> Distribution:
    if m < 1 or not 0 < q < 1:
        raise MITestError(f"binomial needs m >= 1 and 0 < q < 1, got m={m}, q={q}")
    return Distribution(f"binom:{m}:{q:g}", binom.pmf(np.arange(m + 1), m, q))


def categorical(probs) -> Distribution:
    probs = np.asarray(probs, dtype=float)
    return Distribution("categorical:" + ",".join(f"{v:g}" for v in probs), probs)


def parse_distribution(text: str) -> Distribution:
    """``uniform:K``, ``binom:M:Q`` or ``categorical:P1,P2,...``."""
    kind, _, rest = text.partition(":")
    try:
        if kind == "uniform":
            return uniform(int(rest))
        if kind in ("binom", "binomial"):
            m, q = rest.split(":")
            return binomial(int(m), float(q))
        if kind == "categorical":
            return categorical([float(v) for v in rest.split(",")])
    except ValueError:
        pass
    raise MITestError(f"cannot parse distribution {text!r}; use uniform:K, binom:M:Q or categorical:P1,P2,...")


@dataclass(frozen=True)
class SimConfig:
    """One simulation setting.

    ``coupling`` is ``"independent"`` or ``"checkerboard"``; for the latter
    ``strength`` in [0, 1] is the fraction of the largest perturbation that
    keeps every cell nonnegative.
    """

    dist_x: Distribution
    dist_y: Distribution
    n: int
    reps: int = 1000
    stat: str = "t1"
    seed: int = 0
    coupling: str = "independent"
    strength: float = 0.0

    def __post_init__(self):
        if self.n < 1 or self.reps < 1:
            raise MITestError("n and reps must be at least 1")
        if self.stat not in STATISTICS:
            raise MITestError(f"unknown statistic {self.stat!r}")
        if self.coupling not in ("independent", "checkerboard"):
            raise MITestError(f"unknown coupling {self.coupling!r}")

    @property
    def dims(self) -> tuple[int, int]:
        return self.dist_x.k, self.dist_y.k

    def joint_pmf(self) -> np.ndarray:
        base = np.outer(self.dist_x.pmf, self.dist_y.pmf)
        if self.coupling == "independent" or self.strength <= 0:
            return base
        return checkerboard_pmf(base, self.strength)


def checkerboard_pmf(base: np.ndarray, strength: float) -> np.ndarray:
    """Add ``s * a_i b_j`` with centered alternating signs ``a``, ``b``.

    The perturbation has zero row and column sums, so marginals are kept.
    ``strength`` (clipped to [0, 1]) scales ``s`` relative to the largest value
    that keeps all cells nonnegative.
    """
    ni, nj = base.shape
    a = (-1.0) ** np.arange(ni)
    b = (-1.0) ** np.arange(nj)
    e = np.outer(a - a.mean(), b - b.mean())
    neg = e < 0
    s_max = float(np.min(base[neg] / -e[neg])) if neg.any() else 0.0
    p = np.clip(base + float(np.clip(strength, 0.0, 1.0)) * s_max * e, 0.0, None)
    return p / p.sum()


def _rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


def _draw_counts(cfg: SimConfig, rep_index: int) -> tuple[np.ndarray, int]:
    ni, nj = cfg.dims
    pmf = None if cfg.coupling == "independent" else cfg.joint_pmf()
    for attempt in range(MAX_RESAMPLES):
        rng = _rng(cfg.seed, rep_index, attempt)
        if pmf is None:
            x = rng.choice(ni, size=cfg.n, p=cfg.dist_x.pmf)
            y = rng.choice(nj, size=cfg.n, p=cfg.dist_y.pmf)
            counts = crosstab_codes(x.astype(np.int64), y.astype(np.int64), ni, nj)
        else:
            counts = rng.multinomial(cfg.n, pmf.ravel()).reshape(ni, nj).astype(np.int64)
        if counts.sum(axis=1).all() and counts.sum(axis=0).all():
            return counts, attempt
    raise MITestError(f"replicate {rep_index}: no sample without an empty category in {MAX_RESAMPLES} tries")


def sample_pairs(cfg: SimConfig, rep_index: int) -> JointTable:
    """Counts of ``cfg.n`` draws for one replicate.

    A draw leaving a category unobserved is redrawn from the next sub-seed.
    """
    return from_counts(_draw_counts(cfg, rep_index)[0])


def _stat_chunk(cfg: SimConfig, lo: int, hi: int):
    vals = np.empty(hi - lo)
    redraws = 0
    for r in range(lo, hi):
        counts, extra = _draw_counts(cfg, r)
        vals[r - lo] = statistic(from_counts(counts), cfg.stat)
        redraws += extra
    return vals, redraws


def _pvalue_chunk(cfg: SimConfig, lo: int, hi: int, method: str | None, null_marginals):
    out = np.empty(hi - lo)
    for r in range(lo, hi):
        table = from_counts(_draw_counts(cfg, r)[0])
        mc_seed = None
        if method == "mc":
            mc_seed = int(np.random.SeedSequence(cfg.seed, spawn_key=(r, MAX_RESAMPLES)).generate_state(1)[0])
        out[r - lo] = independence_test(table, cfg.stat, 0.05, method, mc_seed,
                                        null_marginals=null_marginals).p_value
    return out


def _map_chunks(fn, cfg: SimConfig, workers: int, *args):
    step = max(1, -(-cfg.reps // max(workers * 4, 1)))
    bounds = [(lo, min(lo + step, cfg.reps)) for lo in range(0, cfg.reps, step)]
    if workers <= 1 or len(bounds) == 1:
        return [fn(cfg, lo, hi, *args) for lo, hi in bounds]
    with ProcessPoolExecutor(workers) as ex:
        futures = [ex.submit(fn, cfg, lo, hi, *args) for lo, hi in bounds]
        return [f.result() for f in futures]


def replicate_statistics(cfg: SimConfig, workers: int = 1, return_redraws: bool = False):
    """Statistic values for ``cfg.reps`` replicates, in replicate order.

    With ``return_redraws`` also returns how many samples were redrawn
    because a category went unobserved.
    """
    parts = _map_chunks(_stat_chunk, cfg, workers)
    values = np.concatenate([v for v, _ in parts])
    redraws = sum(r for _, r in parts)
    return (values, redraws) if return_redraws else values


def replicate_pvalues(cfg: SimConfig, method: str | None = None, workers: int = 1,
                      null_marginals=None) -> np.ndarray:
    return np.concatenate(_map_chunks(_pvalue_chunk, cfg, workers, method, null_marginals))


def estimate_size_power(cfg: SimConfig, alpha: float, method: str | None = None,
                        workers: int = 1) -> float:
    """Fraction of replicates whose p-value is below ``alpha``."""
    if not 0 < alpha <= 1:
        raise MITestError(f"alpha must lie in (0, 1], got {alpha}")
    return float(np.mean(replicate_pvalues(cfg, method, workers) < alpha))


def ks_distance(samples, w: ChiBarWeights, seed: int | None = None) -> float:
    """Kolmogorov-Smirnov distance between ``samples`` and ``chi2_lambda``.

    Negative weights have no series CDF; the distance is then the two-sample
    statistic against Monte Carlo draws, which needs ``seed``.
    """
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    n = x.size
    if n < KS_MIN_SAMPLES:
        raise MITestError(f"need at least {KS_MIN_SAMPLES} samples, got {n}")
    if w.has_negative:
        if seed is None:
            raise MITestError("negative weights: KS against Monte Carlo draws needs a seed")
        return float(ks_2samp(x, sample(w, KS_MC_DRAWS, seed)).statistic)
    f = cdf(w, x)
    upper = np.arange(1, n + 1) / n - f
    lower = f - np.arange(n) / n
    return float(max(upper.max(), lower.max()))


def verify_t2_chi2_identity(dims=(2, 2), trials: int = 100, seed: int = 0, tables=None) -> float:
    """Largest relative gap between T2 and Pearson's chi-square.

    Random tables come from a Dirichlet joint pmf and a random sample size;
    draws with an empty row or column are redrawn. Pass ``tables`` to check
    specific count matrices instead.
    """
    if tables is None:
        if trials < 1:
            raise MITestError("trials must be at least 1")
        ni, nj = dims
        rng = np.random.default_rng(seed)
        tables = []
        while len(tables) < trials:
            pmf = rng.dirichlet(np.ones(ni * nj))
            counts = rng.multinomial(int(rng.integers(20, 501)), pmf).reshape(ni, nj)
            if counts.sum(axis=1).all() and counts.sum(axis=0).all():
                tables.append(counts)
    worst = 0.0
    for counts in tables:
        t = counts if isinstance(counts, JointTable) else from_counts(counts)
        a, b = statistic(t, "t2"), statistic(t, "pearson")
        scale = max(abs(a), abs(b))
        if scale > 0:
            worst = max(worst, abs(a - b) / scale)
    return worst


def _mi_2x2(p11, p21, p12):
    p22 = max(1.0 - p11 - p21 - p12, 0.0)  # rounding can leave -1e-17 on the boundary
    return mutual_information(ProbTable(np.array([[p11, p12], [p21, p22]])))


def mi_curve_2x2(p11_grid) -> np.ndarray:
    """MI of ``[[p11, 1/4], [1/4, 1/2 - p11]]`` for each ``p11`` in [0, 1/2].

    Returns an ``(m, 2)`` array of ``(p11, MI)`` rows.
    """
    grid = np.asarray(p11_grid, dtype=float).ravel()
    if np.any((grid < 0) | (grid > 0.5)):
        raise MITestError("p11 must lie in [0, 0.5]")
    return np.column_stack([grid, [_mi_2x2(v, 0.25, 0.25) for v in grid]])


def mi_surface_2x2(resolution: int = 21) -> np.ndarray:
    """MI over a grid of ``(p11, p21, p12)`` with ``p22 = 1 - sum >= 0``.

    Returns ``(m, 4)`` rows ``(p11, p21, p12, MI)``.
    """
    if resolution < 2:
        raise MITestError("resolution must be at least 2")
    axis = np.linspace(0.0, 1.0, resolution)
    rows = []
    for a in axis:
        for b in axis:
            for c in axis:
                if a + b + c <= 1.0 + 1e-12:
                    rows.append((a, b, c, _mi_2x2(a, b, c)))
    return np.array(rows)

import importlib

import numpy as np
import pytest

from mitest import _kernels_py

try:
    _compiled = importlib.import_module("mitest._kernels")
except ImportError:
    _compiled = None

BACKENDS = [pytest.param(_kernels_py, id="python"),
            pytest.param(_compiled, id="compiled",
                         marks=pytest.mark.skipif(_compiled is None, reason="extension not built"))]


def textbook_delta(alphas, ratios, log_c, n_terms):
    """delta_{k+1} = 1/(k+1) sum_{i=1}^{k+1} i gamma_i delta_{k+1-i}, gamma_i = sum a r^i / i."""
    gam = [0.0] + [sum(a * r**i / i for a, r in zip(alphas, ratios)) for i in range(1, n_terms)]
    delta = [1.0]
    for k in range(n_terms - 1):
        delta.append(sum(i * gam[i] * delta[k + 1 - i] for i in range(1, k + 2)) / (k + 1))
    return np.exp(log_c) * np.array(delta)


@pytest.mark.parametrize("kernel", BACKENDS)
def test_series_weights_match_textbook(kernel):
    alphas = np.array([0.5, 1.5, 1.0])
    scales = np.array([0.4, 2.0, 5.0])
    beta1 = scales.min()
    ratios = 1 - beta1 / scales
    log_c = float(np.sum(alphas * np.log(beta1 / scales)))
    w, rem, ok = kernel.gamma_series_weights(alphas, ratios, log_c, 1e-12, 100_000)
    ref = textbook_delta(alphas, ratios, log_c, 60)
    np.testing.assert_allclose(w[:60], ref, rtol=1e-12)
    assert ok and rem < 1e-12
    assert abs(w.sum() + rem - 1) < 1e-12


@pytest.mark.parametrize("kernel", BACKENDS)
def test_series_single_group_is_one_term(kernel):
    w, rem, ok = kernel.gamma_series_weights(np.array([2.0]), np.array([0.0]), 0.0, 1e-10, 100)
    assert w.tolist() == [1.0] and rem == 0.0 and ok


@pytest.mark.parametrize("kernel", BACKENDS)
def test_series_cap(kernel):
    w, rem, ok = kernel.gamma_series_weights(np.array([0.5, 0.5]), np.array([0.0, 0.999]),
                                             0.5 * np.log(0.001), 1e-12, 5)
    assert len(w) == 6 and not ok and rem > 0


@pytest.mark.parametrize("kernel", BACKENDS)
def test_count_statistics(kernel, rng):
    for _ in range(20):
        counts = rng.integers(0, 30, size=(4, 5)).astype(np.int64) + 1
        n = counts.sum()
        e = np.outer(counts.sum(1), counts.sum(0)) / n
        assert kernel.g2_counts(counts) == pytest.approx(2 * np.sum(counts * np.log(counts / e)), rel=1e-12)
        assert kernel.pearson_counts(counts) == pytest.approx(np.sum((counts - e) ** 2 / e), rel=1e-12)


@pytest.mark.parametrize("kernel", BACKENDS)
def test_pearson_zero_expected(kernel):
    with pytest.raises(ZeroDivisionError):
        kernel.pearson_counts(np.array([[0, 0], [1, 2]], dtype=np.int64))


@pytest.mark.parametrize("kernel", BACKENDS)
def test_crosstab(kernel):
    x = np.array([0, 1, 1, 2], dtype=np.int64)
    y = np.array([1, 0, 0, 1], dtype=np.int64)
    assert kernel.crosstab_codes(x, y, 3, 2).tolist() == [[0, 1], [2, 0], [0, 1]]
    with pytest.raises(IndexError):
        kernel.crosstab_codes(x, y, 2, 2)


@pytest.mark.skipif(_compiled is None, reason="extension not built")
def test_backends_agree_on_wide_series():
    alphas = np.full(12, 0.5)
    scales = np.linspace(0.2, 6.0, 12)
    ratios = 1 - scales.min() / scales
    log_c = float(np.sum(alphas * np.log(scales.min() / scales)))
    a = _kernels_py.gamma_series_weights(alphas, ratios, log_c, 1e-12, 100_000)
    b = _compiled.gamma_series_weights(alphas, ratios, log_c, 1e-12, 100_000)
    np.testing.assert_allclose(a[0], b[0], rtol=1e-12, atol=1e-300)


def test_env_forces_python_backend():
    import os
    import subprocess
    import sys
    env = dict(os.environ, MITEST_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import mitest._core as c; print(c.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"

"""Kernel backend selection.

The compiled extension is used when importable. Set ``MITEST_PURE_PYTHON=1``
to force the pure-Python fallback.
"""

import os

from . import _kernels_py

if os.environ.get("MITEST_PURE_PYTHON"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl
    except ImportError:  # extension not built
        _impl = _kernels_py

BACKEND = "compiled" if _impl is not _kernels_py else "python"

gamma_series_weights = _impl.gamma_series_weights
g2_counts = _impl.g2_counts
pearson_counts = _impl.pearson_counts
crosstab_codes = _impl.crosstab_codes

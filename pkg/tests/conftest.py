import numpy as np
import pytest

from mitest.table import ProbTable


def random_interior(rng, ni, nj):
    """Dirichlet(1) joint pmf shrunk halfway toward uniform; min cell >= 1/(2IJ)."""
    x = 0.5 * rng.dirichlet(np.ones(ni * nj)) + 0.5 / (ni * nj)
    return ProbTable(x.reshape(ni, nj))


def random_product(rng, ni, nj):
    px = 0.5 * rng.dirichlet(np.ones(ni)) + 0.5 / ni
    py = 0.5 * rng.dirichlet(np.ones(nj)) + 0.5 / nj
    return ProbTable(np.outer(px, py))


def random_dims(rng, lo=2, hi=6):
    return tuple(int(v) for v in rng.integers(lo, hi + 1, size=2))


def random_counts(rng, ni, nj, positive_margins=True):
    while True:
        pmf = rng.dirichlet(np.ones(ni * nj))
        counts = rng.multinomial(int(rng.integers(20, 501)), pmf).reshape(ni, nj)
        if not positive_margins or (counts.sum(axis=1).all() and counts.sum(axis=0).all()):
            return counts


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


_criteria = {}


def pytest_runtest_logreport(report):
    if report.when == "teardown" and report.nodeid not in _criteria:
        return
    label = dict(report.user_properties).get("criterion")
    if label is None:
        return
    prev = _criteria.get(report.nodeid)
    failed = report.failed or (prev is not None and prev[1] == "FAIL")
    duration = report.duration + (prev[2] if prev else 0.0)
    _criteria[report.nodeid] = (label, "FAIL" if failed else "PASS", duration)


def pytest_runtest_setup(item):
    mark = item.get_closest_marker("criterion")
    if mark is not None:
        num, label = mark.args
        suffix = f" [{item.callspec.id}]" if hasattr(item, "callspec") else ""
        item.user_properties.append(("criterion", (num, label + suffix)))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for (num, label), status, duration in sorted(_criteria.values()):
        terminalreporter.write_line(f"criterion {num}: {status}  {label}  ({duration:.1f} s)")

import numpy as np
import pytest

from nngmix.dataset import TWO_BLOB_CLUSTERS, make_synthetic_clusters

_ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance_report():
    """Collects one PASS/FAIL line per acceptance criterion."""
    def report(criterion, ok, detail=""):
        line = f"[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
    return report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def two_blobs():
    return make_synthetic_clusters(TWO_BLOB_CLUSTERS, seed=0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240501)

import numpy as np
import pytest
from hypothesis import strategies as st

from rgee.graph import SparseGraph

ACCEPTANCE_RESULTS = []


def record(criterion, passed, detail):
    """Log an acceptance outcome for the terminal summary."""
    ACCEPTANCE_RESULTS.append((criterion, bool(passed), detail))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, passed, detail in sorted(ACCEPTANCE_RESULTS, key=lambda r: r[0]):
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] criterion {criterion:>2}: {detail}")


def random_graph(rng, n, p=0.3, weighted=False):
    upper = np.triu(rng.random((n, n)) < p, 1)
    A = upper.astype(float)
    if weighted:
        A *= rng.uniform(0.1, 2.0, size=(n, n))
    A = A + A.T
    return SparseGraph.from_matrix(A)


@st.composite
def graphs_and_labels(draw, max_n=50, max_k=4, allow_unknown=True):
    """A random undirected graph with labels whose classes 1..K are all nonempty."""
    n = draw(st.integers(2, max_n))
    k = draw(st.integers(1, min(max_k, n)))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    g = random_graph(rng, n, p=draw(st.floats(0.0, 1.0)), weighted=draw(st.booleans()))
    y = np.concatenate([np.arange(1, k + 1), rng.integers(0 if allow_unknown else 1, k + 1, size=n - k)])
    rng.shuffle(y)
    return g, y


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def path4():
    """Path 1-2-3-4 (0-based vertices 0..3)."""
    return SparseGraph.from_edges(4, [0, 1, 2], [1, 2, 3])

import numpy as np
import pytest

from seismicwave.core import SparseVector
from seismicwave.datasets import make_synthetic
from seismicwave.index import build_forward

from oracles import as_dict


def random_vectors(rng, n, dim, nnz, grid=True):
    """Random sparse vectors. With ``grid`` the weights are multiples of
    1/8, so sums are exact and equal scores (ties) are common."""
    out = []
    for _ in range(n):
        m = int(rng.integers(1, nnz + 1))
        ids = np.sort(rng.choice(dim, size=min(m, dim), replace=False))
        if grid:
            w = rng.integers(1, 17, size=ids.size) / 8.0
        else:
            w = rng.lognormal(0.0, 1.0, size=ids.size)
        out.append(SparseVector(ids, w.astype(np.float32)))
    return out


@pytest.fixture(scope="session")
def tiny():
    """60 docs / 12 queries over 40 dims with tie-prone weights."""
    rng = np.random.default_rng(7)
    docs = random_vectors(rng, 60, 40, 8)
    queries = random_vectors(rng, 12, 40, 6)
    fwd = build_forward(docs)
    return fwd, queries, [as_dict(d) for d in docs], [as_dict(q) for q in queries]


@pytest.fixture(scope="session")
def small():
    """800 docs / 60 queries from the synthetic generator."""
    docs, queries = make_synthetic(n_docs=800, n_queries=60, dim=4000, n_topics=40, topic_vocab=200, seed=3)
    return build_forward(docs), queries


# one line per acceptance criterion, printed at the end of the run
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])

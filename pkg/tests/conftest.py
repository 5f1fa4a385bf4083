"""Shared fixtures.

The larger indexes are session-scoped: they back the statistical checks in
several modules and the acceptance suite, and building them once keeps the
whole run fast.
"""

import numpy as np
import pytest

import symqg


@pytest.fixture(scope="session")
def gauss10k():
    rng = np.random.default_rng(1234)
    data = rng.standard_normal((10_000, 32)).astype(np.float32)
    queries = np.random.default_rng(999).standard_normal((100, 32)).astype(np.float32)
    return data, queries


@pytest.fixture(scope="session")
def gt10k(gauss10k):
    data, queries = gauss10k
    return symqg.groundtruth(data, queries, 10)


@pytest.fixture(scope="session")
def index10k(gauss10k):
    import time
    data, _ = gauss10k
    t0 = time.perf_counter()
    index = symqg.build(data, symqg.BuildParams(degree=32, ef=200, iters=3, seed=7))
    elapsed = time.perf_counter() - t0
    return index, elapsed


@pytest.fixture(scope="session")
def gauss1k():
    rng = np.random.default_rng(77)
    data = rng.standard_normal((1000, 32)).astype(np.float32)
    queries = np.random.default_rng(78).standard_normal((100, 32)).astype(np.float32)
    return data, queries


@pytest.fixture(scope="session")
def index1k(gauss1k):
    data, _ = gauss1k
    return symqg.build(data, symqg.BuildParams(degree=32, ef=200, iters=3, seed=3))


@pytest.fixture(scope="session")
def complete33():
    """33 vertices at R=32: the graph is forced to be complete-minus-self."""
    rng = np.random.default_rng(5)
    data = rng.standard_normal((33, 8)).astype(np.float32)
    index = symqg.build(data, symqg.BuildParams(degree=32, ef=32, iters=1, seed=5))
    return data, index

import functools

import numpy as np
import pytest

from siclab.clifford import zauner_eigenspace
from siclab.search import SearchConfig, run_search
from siclab.whgroup import make_context


@functools.lru_cache(maxsize=None)
def _fiducial(d: int, k: int, seed: int):
    ctx = make_context(d)
    cfg = SearchConfig(d, subspace=zauner_eigenspace(ctx, k), restarts=max(20, 4 * d), seed=seed)
    for out in run_search(ctx, cfg):
        if out.converged:
            return out.fiducial
    raise RuntimeError(f"no fiducial found for d={d}, k={k}")


@pytest.fixture(scope="session")
def fiducial():
    """fiducial(d, k=0, seed=0) -> converged Zauner-restricted fiducial (cached)."""
    def get(d, k=0, seed=0):
        return _fiducial(d, k, seed).copy()
    return get


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_state(rng, d):
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return v / np.linalg.norm(v)


ACCEPTANCE_RESULTS: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_RESULTS):
        ok, detail = ACCEPTANCE_RESULTS[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")

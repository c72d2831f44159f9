import os
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

from gep_tsa.instance import GenConfig, generate_instance  # noqa: E402

settings.register_profile("default", deadline=None, max_examples=30,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def small_inst():
    return generate_instance(GenConfig(G=2, N=2, T=12, seed=0))


@pytest.fixture
def desk_inst():
    return generate_instance(GenConfig(G=3, N=3, T=24, seed=5))


def random_desk_instance(rng, gmax=5, nmax=5, tmin=6, tmax=48, **cfg):
    G = int(rng.integers(1, gmax + 1))
    N = int(rng.integers(1, nmax + 1))
    T = int(rng.integers(tmin, tmax + 1))
    return generate_instance(GenConfig(G=G, N=N, T=T, seed=int(rng.integers(2**31)), **cfg))


def rel_close(a, b, tol):
    return abs(a - b) <= tol * max(1.0, abs(b))


ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture
def report(request):
    """Record one PASS/FAIL line per acceptance criterion."""
    store = request.config.stash.setdefault(ACCEPTANCE, {})

    def rec(n, ok, detail):
        line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
        store[str(n)] = line
        print(line)
        return ok

    return rec


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = config.stash.get(ACCEPTANCE, {})
    if store:
        terminalreporter.section("acceptance criteria")
        for n in sorted(store):
            terminalreporter.write_line(store[n])

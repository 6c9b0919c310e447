import os
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

from specop.fdata import FunctionalSample, Grid  # noqa: E402
from specop.simulate import FMAModel, gen_pair  # noqa: E402

settings.register_profile("default", max_examples=30, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


def random_sample(rng, T, k, scale=1.0):
    return FunctionalSample(Grid.midpoint(k), scale * rng.standard_normal((T, k)))


@pytest.fixture
def sample_pair(rng):
    """Small independent white-noise pair, T=21, k=5."""
    return random_sample(rng, 21, 5), random_sample(rng, 21, 5)


@pytest.fixture(scope="session")
def fma_null_pair():
    model = FMAModel(a2=0.0, T=100)
    return gen_pair(model, np.random.default_rng(7))


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in range(1, 11):
        if n in module.RESULTS:
            ok, detail = module.RESULTS[n]
            terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
        else:
            terminalreporter.write_line(f"criterion {n:2d}: NOT RUN")

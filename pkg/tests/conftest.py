import numpy as np
import pytest
from hypothesis import HealthCheck, settings

import viscoident as v

settings.register_profile(
    "default",
    max_examples=120,
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def table1():
    return v.table1_fixture()


@pytest.fixture(scope="session")
def table1_segments(table1):
    return v.fit_kernel_spline(table1)


def make_samples(times, values):
    return v.KernelSamples(np.asarray(times, float), np.asarray(values, float))

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from sparse_diffusion.signal_model import NodeProfile, sample_profiles, substream_rng
from sparse_diffusion.topology import build_uniform_combiners, random_geometric_topology

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE_LINES = []


def record_acceptance(line: str) -> None:
    print(line)
    ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def small_network(seed, N=4, radius=0.7, mu=0.05, exchange_data=False):
    top = random_geometric_topology(N, radius, substream_rng(seed, 2))
    mats = build_uniform_combiners(top, exchange_data)
    profiles = sample_profiles(N, mu, substream_rng(seed, 3))
    return top, mats, profiles


@pytest.fixture
def net4():
    return small_network(5)


@pytest.fixture
def scalar_profile():
    return [NodeProfile(1.0, 0.01, 0.1)]


def random_left_stochastic(rng, N):
    A = rng.random((N, N))
    return A / A.sum(axis=0, keepdims=True)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

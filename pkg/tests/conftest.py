import pytest

from otfs_mdma import (
    ScenarioConfig,
    mrt_gains,
    partition_dd_grid,
    sample_scenario,
)


@pytest.fixture(scope="session")
def small_config():
    # tiny grid keeps the convex solver and BRB fast in unit tests
    return ScenarioConfig(M=2, N=2, delta_M=1, delta_N=2, Q=2, D=2, delta_p=6)


@pytest.fixture(scope="session")
def small_channel(small_config):
    params = sample_scenario(small_config, seed=42)
    return mrt_gains(params)


@pytest.fixture(scope="session")
def small_partition(small_config):
    c = small_config
    return partition_dd_grid(c.M, c.N, c.delta_M, c.delta_N)


@pytest.fixture(scope="session")
def default_config():
    return ScenarioConfig()


@pytest.fixture(scope="session")
def default_channel(default_config):
    params = sample_scenario(default_config, seed=3)
    return mrt_gains(params)


@pytest.fixture(scope="session")
def default_partition(default_config):
    c = default_config
    return partition_dd_grid(c.M, c.N, c.delta_M, c.delta_N)


def random_gain_tensor(rng, Q, nbins, scale=10.0):
    """Random positive effective-gain tensor with dominant diagonal."""
    g = rng.uniform(0.1, scale, size=(Q, Q, nbins))
    for q in range(Q):
        g[q, q, :] *= rng.uniform(2.0, 10.0, size=nbins)
    return g

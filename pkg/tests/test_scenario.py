import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from otfs_mdma import (
    ConfigError,
    ScenarioConfig,
    dbm_to_watt,
    load_config,
    partition_dd_grid,
    path_loss_db,
    sample_scenario,
    watt_to_dbm,
)
from otfs_mdma.scenario import _split_doppler


def test_dbm_roundtrip():
    for dbm in (-108.0, 0.0, 30.0, 45.0):
        assert watt_to_dbm(dbm_to_watt(dbm)) == pytest.approx(dbm)
    assert dbm_to_watt(30.0) == pytest.approx(1.0)
    assert dbm_to_watt(45.0) == pytest.approx(10 ** 1.5)


def test_path_loss_reference_value():
    # -30.5 - 36.7*log10(d) at d = 1 m and d = 100 m
    assert path_loss_db(1.0) == pytest.approx(-30.5)
    assert path_loss_db(100.0) == pytest.approx(-30.5 - 36.7 * 2.0)
    with pytest.raises(ValueError):
        path_loss_db(0.0)


def test_config_defaults_shape():
    cfg = ScenarioConfig()
    assert cfg.MN == 8
    assert cfg.R == 4
    assert cfg.alpha_vec.shape == (3,)
    assert np.all(cfg.alpha_vec == 1.0)
    assert np.all(cfg.c_min_vec == 0.0)


@pytest.mark.parametrize(
    "kw",
    [
        dict(M=3, delta_M=2),
        dict(N=3, delta_N=2),
        dict(Q=0),
        dict(P=-1.0),
        dict(eps_brb=0.0),
        dict(zeta=1.0),
        dict(delta_p=0),
        dict(alpha=(1.0, 0.0, 1.0)),
        dict(C_min=-0.1),
        dict(distance_range=(0.0, 10.0)),
    ],
)
def test_config_rejects_bad_values(kw):
    with pytest.raises(ConfigError):
        ScenarioConfig(**kw)


@given(
    st.sampled_from([2, 4, 8]),
    st.sampled_from([2, 4, 8]),
    st.sampled_from([1, 2]),
    st.sampled_from([1, 2]),
)
@settings(max_examples=30, deadline=None)
def test_partition_covers_grid(M, N, dM, dN):
    part = partition_dd_grid(M, N, dM, dN)
    assert part.R == M * N // (dM * dN)
    seen = [b for slot in part.slots for b in slot]
    assert sorted(seen) == list(range(M * N))
    for r, slot in enumerate(part.slots):
        assert len(slot) == dM * dN
        for b in slot:
            assert part.slot_of_bin(b) == r


def test_partition_rejects_nondivisible():
    with pytest.raises(ConfigError):
        partition_dd_grid(3, 4, 2, 2)


def test_partition_slots_are_rectangles():
    part = partition_dd_grid(4, 4, 2, 2)
    for slot in part.slots:
        ks = sorted({b // 4 for b in slot})
        ls = sorted({b % 4 for b in slot})
        assert len(ks) == 2 and ks[1] == ks[0] + 1
        assert len(ls) == 2 and ls[1] == ls[0] + 1


def test_split_doppler_ties_and_range():
    # exact .5 keeps the fraction at +/-0.5 with integer toward zero
    assert _split_doppler(0.5) == (0, 0.5)
    assert _split_doppler(-0.5) == (0, -0.5)
    assert _split_doppler(1.5) == (1, 0.5)
    assert _split_doppler(-1.5) == (-1, -0.5)
    k, f = _split_doppler(2.3)
    assert k == 2 and f == pytest.approx(0.3)
    for x in np.linspace(-7, 7, 101):
        k, f = _split_doppler(x)
        assert -0.5 <= f <= 0.5
        assert k + f == pytest.approx(x)


def test_sample_scenario_deterministic_and_sorted():
    cfg = ScenarioConfig()
    a = sample_scenario(cfg, seed=5)
    b = sample_scenario(cfg, seed=5)
    assert np.array_equal(a.gains, b.gains)
    assert np.array_equal(a.delay_bins, b.delay_bins)
    # users sorted by descending average path power
    assert np.all(np.diff(a.sigmas) <= 0)
    assert np.all(np.abs(a.doppler_fracs) <= 0.5)
    assert np.all(a.delay_bins >= 0)
    assert a.gains.shape == (cfg.Q, cfg.L_q)


def test_sample_scenario_distances_in_range():
    cfg = ScenarioConfig()
    for seed in range(10):
        p = sample_scenario(cfg, seed=seed)
        lo, hi = cfg.distance_range
        assert np.all((p.distances >= lo) & (p.distances <= hi))


def test_sample_scenario_angle_mean_distribution():
    # departure-angle means are U[0, pi/2]: check the sample mean over many draws
    cfg = ScenarioConfig(Q=1, L_q=1)
    means = []
    for seed in range(400):
        p = sample_scenario(cfg, seed=seed)
        means.append(p.angles.mean())
    mean = float(np.mean(means))
    # mean of U[0, pi/2] +/- path spread U[-pi/8, pi/8] is pi/4
    assert abs(mean - math.pi / 4) < 0.08


def test_load_config_parses_units_lists_comments(tmp_path):
    cfg_text = """
# experiment setup
M = 4
N: 4
delta_M = 2
delta_N = 2
Q = 2
P = 40 dBm           # budget
noise_power = -100 dBm
C_min = 0.5, 0.25
alpha = 2.0, 1.0
distance_range = 100, 300
rng_seed = 7
"""
    path = tmp_path / "exp.cfg"
    path.write_text(cfg_text)
    cfg = load_config(str(path))
    assert cfg.M == 4 and cfg.N == 4 and cfg.Q == 2
    assert cfg.P == pytest.approx(dbm_to_watt(40.0))
    assert cfg.noise_power == pytest.approx(dbm_to_watt(-100.0))
    assert tuple(cfg.c_min_vec) == (0.5, 0.25)
    assert tuple(cfg.alpha_vec) == (2.0, 1.0)
    assert cfg.distance_range == (100.0, 300.0)
    assert cfg.rng_seed == 7


def test_load_config_rejects_unknown_key(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("bogus = 1\n")
    with pytest.raises(ConfigError):
        load_config(str(path))


def test_load_config_rejects_bad_line(tmp_path):
    path = tmp_path / "bad2.cfg"
    path.write_text("just words\n")
    with pytest.raises(ConfigError):
        load_config(str(path))


def test_with_returns_modified_copy():
    cfg = ScenarioConfig()
    cfg2 = cfg.with_(Q=2, D=4)
    assert cfg2.Q == 2 and cfg2.D == 4
    assert cfg.Q == 3

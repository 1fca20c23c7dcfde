import numpy as np
import pytest

from otfs_mdma import (
    ScenarioConfig,
    check_sic_order,
    mrt_gains,
    partition_dd_grid,
    plan_weighted_sum,
    sample_scenario,
    sca_power_allocation,
    sca_solve_p3,
    sa_search,
)
from otfs_mdma.feasopt import ScaSubproblemSolver
from otfs_mdma.rates import AccessPlan
from otfs_mdma.scasa import flip_random_rs, sa_accept_and_update

_LN2 = np.log(2.0)


@pytest.fixture(scope="module")
def setup():
    cfg = ScenarioConfig(M=2, N=2, delta_M=1, delta_N=2, Q=2, D=2)
    params = sample_scenario(cfg, seed=8)
    ch = mrt_gains(params)
    part = partition_dd_grid(cfg.M, cfg.N, cfg.delta_M, cfg.delta_N)
    return cfg, ch, part


def test_sca_all_sdma_feasible(setup):
    cfg, ch, part = setup
    res = sca_solve_p3(np.ones(part.R), ch, part, cfg.alpha_vec, cfg.c_min_vec, cfg.P, cfg.eta)
    assert res.feasible
    assert res.plan.pairs == (None, None)
    assert res.value > 0
    assert res.power.spent(res.plan, part) <= cfg.P * (1 + 1e-6)


def test_sca_all_noma_respects_sic(setup):
    cfg, ch, part = setup
    res = sca_solve_p3(np.zeros(part.R), ch, part, cfg.alpha_vec, cfg.c_min_vec, cfg.P, cfg.eta)
    assert res.feasible
    for r, slot in enumerate(part.slots):
        pair = res.plan.pairs[r]
        assert pair == (0, 1)
        assert check_sic_order(ch, res.power, slot, *pair, tol=1e-6)


def test_sca_value_matches_plan_evaluation(setup):
    cfg, ch, part = setup
    res = sca_solve_p3(np.zeros(part.R), ch, part, cfg.alpha_vec, cfg.c_min_vec, cfg.P, cfg.eta)
    v = plan_weighted_sum(res.plan, ch, res.power, cfg.alpha_vec, part)
    assert res.value == pytest.approx(v, rel=1e-9)


def test_sca_inner_objective_monotone(setup):
    cfg, ch, part = setup
    trace = []
    sca_solve_p3(
        np.ones(part.R), ch, part, cfg.alpha_vec, cfg.c_min_vec, cfg.P, cfg.eta,
        obj_trace=trace,
    )
    assert len(trace) >= 1
    assert all(b >= a - 1e-8 for a, b in zip(trace, trace[1:]))


def test_sca_single_user_rejects_noma_slots():
    cfg = ScenarioConfig(M=2, N=2, delta_M=1, delta_N=2, Q=1, D=2)
    params = sample_scenario(cfg, seed=1)
    ch = mrt_gains(params)
    part = partition_dd_grid(cfg.M, cfg.N, cfg.delta_M, cfg.delta_N)
    res = sca_solve_p3(np.array([1.0, 0.0]), ch, part, cfg.alpha_vec, cfg.c_min_vec, cfg.P, cfg.eta)
    assert not res.feasible


def test_sca_rate_floor_enforced(setup):
    cfg, ch, part = setup
    c_min = np.array([0.3, 0.3])
    res = sca_solve_p3(np.ones(part.R), ch, part, cfg.alpha_vec, c_min, cfg.P, cfg.eta)
    if res.feasible:
        from otfs_mdma import user_total_rate

        for q in range(cfg.Q):
            assert user_total_rate(res.plan, res.power, ch, part, q) >= c_min[q] - 1e-6


def test_sca_power_allocation_fixed_plan(setup):
    cfg, ch, part = setup
    plan = AccessPlan(pairs=((0, 1), None))
    res = sca_power_allocation(plan, ch, part, cfg.alpha_vec, cfg.c_min_vec, cfg.P, cfg.eta)
    assert res.feasible
    assert res.plan.pairs == plan.pairs
    assert res.power.spent(plan, part) <= cfg.P * (1 + 1e-6)
    # the NOMA slot leaves the unscheduled users' bins unused
    for b in part.slots[0]:
        assert res.power.p[:, b].shape == (2,)


def test_feasible_point_satisfies_constraints(setup):
    cfg, ch, part = setup
    solver = ScaSubproblemSolver(ch, part, cfg.alpha_vec, cfg.c_min_vec, cfg.P, cfg.eta)
    solver.set_access(np.zeros(part.R))
    a_bin = np.zeros((part.R, 1))
    a_bin[:, 0] = 1.0
    pt = solver.feasible_point(a_bin)
    assert pt.p.sum() <= cfg.P * (1 + 1e-9)
    # SIC holds at the constructed point
    for j, (u, v_) in enumerate(solver.pairs):
        lhs = ch.gamma[u, u, :] * pt.pt_nq[j, :]
        rhs = ch.gamma[u, v_, :] * pt.pt_ni[j, :]
        assert np.all(lhs <= rhs + 1e-9)
    # SINR variables sit exactly on the nonconvex surface
    for j, (u, v_) in enumerate(solver.pairs):
        want = ch.gamma[v_, v_, :] * pt.pt_ni[j, :] / (ch.gamma[v_, u, :] * pt.pt_nq[j, :] + 1.0)
        assert np.allclose(pt.nu_n[j, :], want)


# --- simulated annealing helpers ------------------------------------------


def test_flip_random_rs_avoids_visited():
    rng = np.random.default_rng(0)
    a = np.zeros(3)
    visited = {(0, 0, 0)}
    seen = set()
    for _ in range(20):
        nxt = flip_random_rs(a, rng, visited)
        assert nxt is not None
        key = tuple(int(x) for x in nxt)
        assert key not in visited
        assert int(np.sum(nxt != a)) == 1
        seen.add(key)
    # exhaustion: all single-flip neighbours visited
    visited = {(1, 0, 0), (0, 1, 0), (0, 0, 1)}
    assert flip_random_rs(a, rng, visited) is None


def test_sa_accept_rule():
    rng = np.random.default_rng(0)
    # improvement (or tie) always accepted
    assert sa_accept_and_update(2.0, 1.0, 1.0, rng) == (True, True)
    assert sa_accept_and_update(1.0, 1.0, 1.0, rng) == (True, True)
    # large degradation at tiny temperature: essentially never kept
    improves, keep = sa_accept_and_update(0.0, 10.0, 1e-6, rng)
    assert not improves and not keep
    # small degradation at huge temperature: essentially always kept
    improves, keep = sa_accept_and_update(9.999, 10.0, 1e6, rng)
    assert not improves and keep


def test_sa_search_finds_at_least_all_sdma(setup):
    cfg, ch, part = setup
    base = sca_solve_p3(np.ones(part.R), ch, part, cfg.alpha_vec, cfg.c_min_vec, cfg.P, cfg.eta)
    out = sa_search(
        ch, part, cfg.alpha_vec, cfg.c_min_vec, cfg.P, cfg.eta,
        rng=np.random.default_rng(4), keep_trace=True,
    )
    assert out.feasible
    assert out.value >= base.value - 1e-6
    assert out.evaluations <= 2 ** part.R
    # the best-so-far trajectory never decreases
    bests = [row[3] for row in out.trace]
    assert all(b >= a for a, b in zip(bests, bests[1:]))


def test_sa_search_deterministic_given_rng(setup):
    cfg, ch, part = setup
    a = sa_search(ch, part, cfg.alpha_vec, cfg.c_min_vec, cfg.P, cfg.eta,
                  rng=np.random.default_rng(11))
    b = sa_search(ch, part, cfg.alpha_vec, cfg.c_min_vec, cfg.P, cfg.eta,
                  rng=np.random.default_rng(11))
    assert a.value == pytest.approx(b.value, rel=1e-6)
    assert np.array_equal(a.a_s, b.a_s)

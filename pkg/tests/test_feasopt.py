import numpy as np
import pytest
from scipy.optimize import linprog

from otfs_mdma import min_power_noma, min_power_sdma

from conftest import random_gain_tensor


def lp_oracle_noma(z_q, z_i, gqq, gii, giq, gqi, p_r):
    """Phase-I LP: min total power under rate targets + SIC rows."""
    nb = z_q.size
    cq = np.exp2(z_q) - 1.0
    ci = np.exp2(z_i) - 1.0
    n = 2 * nb
    A_ub, b_ub = [], []
    for b in range(nb):
        row = np.zeros(n)
        row[b] = -gqq[b]
        A_ub.append(row)
        b_ub.append(-cq[b])
        row = np.zeros(n)
        row[nb + b] = -gii[b]
        row[b] = ci[b] * giq[b]
        A_ub.append(row)
        b_ub.append(-ci[b])
        row = np.zeros(n)
        row[b] = gqq[b]
        row[nb + b] = -gqi[b]
        A_ub.append(row)
        b_ub.append(0.0)
    res = linprog(np.ones(n), A_ub=np.array(A_ub), b_ub=np.array(b_ub), bounds=(0, None), method="highs")
    if not res.success or res.fun > p_r * (1 + 1e-9):
        return False, None
    return True, res.x.reshape(2, nb)


def lp_oracle_sdma(z, gamma_slot, p_r):
    Q, nb = z.shape
    c = np.exp2(z) - 1.0
    n = Q * nb
    A_ub, b_ub = [], []
    for b in range(nb):
        for q in range(Q):
            row = np.zeros(n)
            row[q * nb + b] = -gamma_slot[q, q, b]
            for i in range(Q):
                if i != q:
                    row[i * nb + b] = c[q, b] * gamma_slot[q, i, b]
            A_ub.append(row)
            b_ub.append(-c[q, b])
    res = linprog(np.ones(n), A_ub=np.array(A_ub), b_ub=np.array(b_ub), bounds=(0, None), method="highs")
    if not res.success or res.fun > p_r * (1 + 1e-9):
        return False, None
    return True, res.x.reshape(Q, nb)


def test_noma_zero_targets_need_zero_power():
    z = np.zeros(2)
    g = np.ones(2)
    res = min_power_noma(z, z, g, g, g, g, 1.0)
    assert res.feasible
    assert np.all(res.min_powers == 0)
    assert res.slack == pytest.approx(1.0)


def test_noma_forward_substitution_values():
    # single bin, hand-computed chain
    gqq, gii, giq, gqi = 4.0, 2.0, 1.0, 4.0
    z_q, z_i = np.array([2.0]), np.array([1.0])
    pq = (2**2 - 1) / gqq                    # 0.75
    pi = (2**1 - 1) * (giq * pq + 1) / gii   # 0.875
    res = min_power_noma(z_q, z_i, np.array([gqq]), np.array([gii]), np.array([giq]), np.array([gqi]), 10.0)
    assert res.feasible
    assert res.min_powers[0, 0] == pytest.approx(pq)
    assert res.min_powers[1, 0] == pytest.approx(pi)


def test_noma_budget_violation():
    g = np.ones(1)
    res = min_power_noma(np.array([10.0]), np.array([10.0]), g, g, g, g, 1.0)
    assert not res.feasible


def test_noma_zero_gain_with_positive_target():
    z = np.array([1.0])
    res = min_power_noma(z, z, np.zeros(1), np.ones(1), np.ones(1), np.ones(1), 10.0)
    assert not res.feasible


def test_noma_sic_fallback_reaches_lp_optimum():
    # substitution minimum violates SIC (gqi small): LP must raise p_i
    gqq = np.array([4.0])
    gii = np.array([4.0])
    giq = np.array([0.5])
    gqi = np.array([0.1])
    z_q = np.array([2.0])
    z_i = np.array([0.1])
    res = min_power_noma(z_q, z_i, gqq, gii, giq, gqi, 100.0)
    ok, powers = lp_oracle_noma(z_q, z_i, gqq, gii, giq, gqi, 100.0)
    assert res.feasible == ok
    assert np.allclose(res.min_powers, powers, rtol=1e-7, atol=1e-12)
    # SIC is active at the optimum
    assert gqq * res.min_powers[0] <= gqi * res.min_powers[1] + 1e-9


def test_sdma_fixed_point_hand_case():
    # one bin, two users, no cross gains: decoupled closed form
    gamma = np.zeros((2, 2, 1))
    gamma[0, 0, 0] = 2.0
    gamma[1, 1, 0] = 4.0
    z = np.array([[1.0], [2.0]])
    res = min_power_sdma(z, gamma, 10.0)
    assert res.feasible
    assert res.min_powers[0, 0] == pytest.approx(1.0 / 2.0)
    assert res.min_powers[1, 0] == pytest.approx(3.0 / 4.0)


def test_sdma_spectral_radius_infeasible():
    # strong mutual interference with aggressive targets: rho(DF) >= 1
    gamma = np.ones((2, 2, 1))
    gamma[0, 0, 0] = gamma[1, 1, 0] = 1.0
    z = np.array([[2.0], [2.0]])  # c = 3, D F has entries 3 -> rho = 3
    res = min_power_sdma(z, gamma, 1e9)
    assert not res.feasible


@pytest.mark.parametrize("seed", range(20))
def test_noma_matches_lp_oracle(seed):
    rng = np.random.default_rng(seed)
    nb = int(rng.integers(1, 4))
    gqq = rng.uniform(0.5, 20, nb)
    gii = rng.uniform(0.5, 20, nb)
    giq = rng.uniform(0.1, 10, nb)
    gqi = rng.uniform(0.1, 10, nb)
    z_q = rng.uniform(0.0, 3.0, nb)
    z_i = rng.uniform(0.0, 3.0, nb)
    p_r = float(rng.uniform(0.5, 30))
    res = min_power_noma(z_q, z_i, gqq, gii, giq, gqi, p_r)
    ok, powers = lp_oracle_noma(z_q, z_i, gqq, gii, giq, gqi, p_r)
    assert res.feasible == ok
    if ok:
        assert np.allclose(res.min_powers.sum(), powers.sum(), rtol=1e-7, atol=1e-9)


@pytest.mark.parametrize("seed", range(20))
def test_sdma_matches_lp_oracle(seed):
    rng = np.random.default_rng(100 + seed)
    Q = int(rng.integers(2, 4))
    nb = int(rng.integers(1, 4))
    gamma = random_gain_tensor(rng, Q, nb)
    z = rng.uniform(0.0, 2.0, size=(Q, nb))
    p_r = float(rng.uniform(0.5, 30))
    res = min_power_sdma(z, gamma, p_r)
    ok, powers = lp_oracle_sdma(z, gamma, p_r)
    assert res.feasible == ok
    if ok:
        assert np.allclose(res.min_powers, powers, rtol=1e-6, atol=1e-9)

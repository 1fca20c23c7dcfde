"""Reference schemes the optimizers are benchmarked against.

All four return the same ScaResult record as the main solvers so the
harness can treat every scheme uniformly.
"""

from __future__ import annotations

import numpy as np

from .channel import EffectiveChannel
from .rates import AccessPlan, PowerAllocation, plan_weighted_sum, user_total_rate
from .scasa import ScaResult, sca_power_allocation
from .scenario import RsPartition

__all__ = [
    "sdma_all",
    "random_noma",
    "random_mixed_opt",
    "random_mixed_equal",
    "random_access_plan",
]

_RATE_FLOOR_TOL = 1e-6


def sdma_all(
    channel: EffectiveChannel,
    partition: RsPartition,
    alpha: np.ndarray,
    c_min: np.ndarray,
    P: float,
    eta: float,
    rng: np.random.Generator | None = None,
) -> ScaResult:
    """Every slot SDMA, powers optimized."""
    plan = AccessPlan.all_sdma(partition.R)
    return sca_power_allocation(plan, channel, partition, alpha, c_min, P, eta)


def _random_pairs(Q: int, R: int, rng: np.random.Generator) -> list[tuple[int, int]]:
    out = []
    for _ in range(R):
        q, i = sorted(rng.choice(Q, size=2, replace=False))
        out.append((int(q), int(i)))
    return out


def random_access_plan(
    Q: int,
    R: int,
    c_min: np.ndarray,
    rng: np.random.Generator,
    mixed: bool,
    max_draws: int = 200,
) -> AccessPlan:
    """Uniformly random plan; resampled until every floored user is covered.

    ``mixed`` draws a fair SDMA/NOMA coin per slot, otherwise all slots are
    NOMA.  Falls back to all-SDMA when coverage never comes up (only
    possible for tiny R).
    """
    floored = [q for q in range(Q) if c_min[q] > 0]
    for _ in range(max_draws):
        if mixed:
            flags = rng.random(R) < 0.5
        else:
            flags = np.zeros(R, dtype=bool)
        pairs = _random_pairs(Q, R, rng)
        plan = AccessPlan(
            tuple(None if flags[r] else pairs[r] for r in range(R))
        )
        if all(plan.covers(q) for q in floored):
            return plan
    return AccessPlan.all_sdma(R)


def random_noma(
    channel: EffectiveChannel,
    partition: RsPartition,
    alpha: np.ndarray,
    c_min: np.ndarray,
    P: float,
    eta: float,
    rng: np.random.Generator,
) -> ScaResult:
    """Every slot NOMA with a uniformly random pair, powers optimized."""
    if channel.Q < 2:
        return ScaResult(False, -np.inf)
    plan = random_access_plan(channel.Q, partition.R, np.asarray(c_min), rng, mixed=False)
    return sca_power_allocation(plan, channel, partition, alpha, c_min, P, eta)


def random_mixed_opt(
    channel: EffectiveChannel,
    partition: RsPartition,
    alpha: np.ndarray,
    c_min: np.ndarray,
    P: float,
    eta: float,
    rng: np.random.Generator,
) -> ScaResult:
    """Random SDMA/NOMA mix per slot, powers optimized."""
    if channel.Q < 2:
        plan = AccessPlan.all_sdma(partition.R)
    else:
        plan = random_access_plan(channel.Q, partition.R, np.asarray(c_min), rng, mixed=True)
    return sca_power_allocation(plan, channel, partition, alpha, c_min, P, eta)


def random_mixed_equal(
    channel: EffectiveChannel,
    partition: RsPartition,
    alpha: np.ndarray,
    c_min: np.ndarray,
    P: float,
    eta: float,
    rng: np.random.Generator,
) -> ScaResult:
    """Random SDMA/NOMA mix with a flat power split.

    Each slot gets P/R; within a slot the per-bin budget is split equally
    among the scheduled users.  NOMA bins where the even split breaks the
    SIC order are tilted onto the order boundary while keeping the bin
    budget.
    """
    Q = channel.Q
    R = partition.R
    c_min = np.asarray(c_min, dtype=float)
    if Q < 2:
        plan = AccessPlan.all_sdma(R)
    else:
        plan = random_access_plan(Q, R, c_min, rng, mixed=True)
    power = np.zeros((Q, channel.MN))
    per_rs = P / R
    for r, slot in enumerate(partition.slots):
        idx = list(slot)
        per_bin = per_rs / len(idx)
        pair = plan.pairs[r]
        if pair is None:
            power[:, idx] = per_bin / Q
            continue
        q, i = pair
        for b in idx:
            gqq = channel.gamma[q, q, b]
            gqi = channel.gamma[q, i, b]
            pq = pi = per_bin / 2.0
            if gqq * pq > gqi * pi:
                denom = gqq + gqi
                if denom > 0:
                    pq = per_bin * gqi / denom
                    pi = per_bin - pq
                else:
                    pq, pi = 0.0, per_bin
            power[q, b] = pq
            power[i, b] = pi
    alloc = PowerAllocation(power)
    value = plan_weighted_sum(plan, channel, alloc, np.asarray(alpha, dtype=float), partition)
    for q in range(Q):
        if c_min[q] > 0:
            if not plan.covers(q):
                return ScaResult(False, -np.inf, plan, alloc)
            if user_total_rate(plan, alloc, channel, partition, q) < c_min[q] - _RATE_FLOOR_TOL:
                return ScaResult(False, -np.inf, plan, alloc)
    return ScaResult(True, float(value), plan, alloc)

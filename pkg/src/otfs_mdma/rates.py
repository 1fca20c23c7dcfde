"""Rate formulas and objective/constraint evaluation for the joint problem.

Rates are Shannon rates in bits/s/Hz, normalized by the grid size MN.
Natural-log internals are converted to base 2 once per sum.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import EffectiveChannel
from .scenario import RsPartition

__all__ = [
    "AccessPlan",
    "PowerAllocation",
    "noma_pair_rates",
    "sdma_rates",
    "rs_weighted_sum",
    "user_total_rate",
    "check_sic_order",
    "plan_weighted_sum",
    "sic_tolerance",
]

_LN2 = float(np.log(2.0))


@dataclass(frozen=True)
class AccessPlan:
    """Per-RS access decision: a (q, i) NOMA pair with q < i, or SDMA (None)."""

    pairs: tuple[tuple[int, int] | None, ...]

    def __post_init__(self):
        for r, pair in enumerate(self.pairs):
            if pair is not None:
                q, i = pair
                if not q < i:
                    raise ValueError(f"RS {r}: NOMA pair must have q < i, got {pair}")

    @property
    def R(self) -> int:
        return len(self.pairs)

    def is_noma(self, r: int) -> bool:
        return self.pairs[r] is not None

    @property
    def n_noma_slots(self) -> int:
        return sum(1 for p in self.pairs if p is not None)

    @property
    def n_sdma_slots(self) -> int:
        return sum(1 for p in self.pairs if p is None)

    def a_s(self) -> np.ndarray:
        return np.array([0 if p is not None else 1 for p in self.pairs])

    def covers(self, q: int) -> bool:
        """True when user q is scheduled in at least one RS."""
        return any(p is None or q in p for p in self.pairs)

    @staticmethod
    def all_sdma(R: int) -> "AccessPlan":
        return AccessPlan(pairs=(None,) * R)


@dataclass
class PowerAllocation:
    """Nonnegative per-user, per-bin transmit powers, shape [Q, MN] (watts)."""

    p: np.ndarray

    def __post_init__(self):
        self.p = np.asarray(self.p, dtype=float)
        if np.any(self.p < 0):
            raise ValueError("powers must be nonnegative")

    @staticmethod
    def zeros(Q: int, MN: int) -> "PowerAllocation":
        return PowerAllocation(np.zeros((Q, MN)))

    def spent(self, plan: AccessPlan, partition: RsPartition) -> float:
        """Total power actually transmitted under the given plan."""
        total = 0.0
        for r, bins in enumerate(partition.slots):
            idx = list(bins)
            pair = plan.pairs[r]
            if pair is not None:
                q, i = pair
                total += self.p[q, idx].sum() + self.p[i, idx].sum()
            else:
                total += self.p[:, idx].sum()
        return float(total)


def sic_tolerance(scale: float) -> float:
    """Round-off slack used when checking the SIC decoding-order constraint."""
    return 1e-9 * (1.0 + abs(scale))


def noma_pair_rates(
    channel: EffectiveChannel,
    power: PowerAllocation,
    slot: tuple[int, ...],
    q: int,
    i: int,
) -> tuple[float, float]:
    """Average rates (C_q, C_i) of a NOMA pair q < i on the given slot bins.

    The SIC-decoding user q sees no residual interference; the weak user i
    treats user q's signal as noise.
    """
    if not q < i:
        raise ValueError("NOMA pair must satisfy q < i")
    b = list(slot)
    MN = channel.MN
    gqq = channel.gamma[q, q, b]
    gii = channel.gamma[i, i, b]
    giq = channel.gamma[i, q, b]
    pq = power.p[q, b]
    pi = power.p[i, b]
    c_q = float(np.sum(np.log1p(gqq * pq)) / (_LN2 * MN))
    c_i = float(np.sum(np.log1p(gii * pi / (giq * pq + 1.0))) / (_LN2 * MN))
    return c_q, c_i


def sdma_rates(
    channel: EffectiveChannel,
    power: PowerAllocation,
    slot: tuple[int, ...],
) -> np.ndarray:
    """Per-user average rates on one SDMA slot (length-Q vector)."""
    b = list(slot)
    MN = channel.MN
    Q = channel.Q
    out = np.zeros(Q)
    for q in range(Q):
        gqq = channel.gamma[q, q, b]
        interf = np.zeros(len(b))
        for i in range(Q):
            if i != q:
                interf += channel.gamma[q, i, b] * power.p[i, b]
        out[q] = np.sum(np.log1p(gqq * power.p[q, b] / (interf + 1.0))) / (_LN2 * MN)
    return out


def rs_weighted_sum(
    plan: AccessPlan,
    channel: EffectiveChannel,
    power: PowerAllocation,
    alpha: np.ndarray,
    partition: RsPartition,
    r: int,
) -> float:
    """Weighted sum-rate contributed by RS r under the plan's choice there."""
    slot = partition.slots[r]
    pair = plan.pairs[r]
    if pair is not None:
        q, i = pair
        c_q, c_i = noma_pair_rates(channel, power, slot, q, i)
        return float(alpha[q] * c_q + alpha[i] * c_i)
    rates = sdma_rates(channel, power, slot)
    return float(np.dot(alpha, rates))


def plan_weighted_sum(
    plan: AccessPlan,
    channel: EffectiveChannel,
    power: PowerAllocation,
    alpha: np.ndarray,
    partition: RsPartition,
) -> float:
    """Objective of the joint problem: sum of per-RS weighted rates."""
    return sum(
        rs_weighted_sum(plan, channel, power, alpha, partition, r)
        for r in range(partition.R)
    )


def user_total_rate(
    plan: AccessPlan,
    power: PowerAllocation,
    channel: EffectiveChannel,
    partition: RsPartition,
    q: int,
) -> float:
    """Total rate of user q across all RSs (left side of the rate floor)."""
    total = 0.0
    for r, slot in enumerate(partition.slots):
        pair = plan.pairs[r]
        if pair is None:
            total += sdma_rates(channel, power, slot)[q]
        elif q in pair:
            a, b = pair
            c_a, c_b = noma_pair_rates(channel, power, slot, a, b)
            total += c_a if q == a else c_b
    return float(total)


def check_sic_order(
    channel: EffectiveChannel,
    power: PowerAllocation,
    slot: tuple[int, ...],
    q: int,
    i: int,
    tol: float | None = None,
) -> bool:
    """SIC decodability: gamma_qqb*p_qb <= gamma_qib*p_ib (+tol) on every bin."""
    b = list(slot)
    lhs = channel.gamma[q, q, b] * power.p[q, b]
    rhs = channel.gamma[q, i, b] * power.p[i, b]
    if tol is None:
        tol = sic_tolerance(float(np.max(np.abs(rhs), initial=0.0)))
    return bool(np.all(lhs <= rhs + tol))

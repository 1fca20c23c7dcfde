"""Globally optimal solver: dynamic program over slots, monotonic branch-
reduce-bound (BRB) within a slot.

The per-slot subproblem maximizes a weighted sum of per-bin rate targets
z over the normal (downward-closed) feasible set induced by the slot power
budget, so it fits the monotonic-optimization template: branch a box,
tighten it with the closed-form reduction, bound with the linear objective
at the upper corner, and certify lower bounds by closed-form minimal-power
feasibility checks.  The outer DP walks the slots with a discretized
cumulative-power state.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from .channel import EffectiveChannel
from .feasopt import min_power_noma, min_power_sdma
from .rates import AccessPlan, PowerAllocation
from .scenario import RsPartition

__all__ = [
    "BrbBox",
    "BrbOutcome",
    "branch_box",
    "reduce_box",
    "brb_maximize",
    "solve_rs_optimal",
    "dp_solve",
    "DpResult",
]

_LN2 = float(np.log(2.0))


@dataclass
class BrbBox:
    """Axis-aligned box [lo, hi] in rate-target space."""

    lo: np.ndarray
    hi: np.ndarray
    f_ub: float


@dataclass
class BrbOutcome:
    value: float            # certified best weighted sum (f_min at exit)
    f_ub: float             # remaining global upper bound (f_max at exit)
    powers: np.ndarray      # [n_users, nb] minimal powers achieving `value`
    z_best: np.ndarray      # rate targets achieving `value`
    iterations: int
    converged: bool


def branch_box(box: BrbBox) -> tuple[np.ndarray, np.ndarray]:
    """Bisect the longest side (ties to the lowest index); return the two
    hi/lo corners that change: (hi of lower child, lo of upper child)."""
    widths = box.hi - box.lo
    k = int(np.argmax(widths))
    mid = 0.5 * (box.lo[k] + box.hi[k])
    hi1 = box.hi.copy()
    hi1[k] = mid
    lo2 = box.lo.copy()
    lo2[k] = mid
    return hi1, lo2


def reduce_box(
    lo: np.ndarray,
    hi: np.ndarray,
    w: np.ndarray,
    f_min: float,
    f_ub: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Shrink [lo, hi] without losing any point of value in (f_min, f_ub].

    With the linear objective w.z, the cut fractions have closed forms:
    raise lo toward hi until w.lo reaches f_min along each axis, then pull
    hi back toward the new lo until w.hi reaches f_ub.
    """
    widths = hi - lo
    l_hi = w @ hi
    wd = w * widths
    safe = np.where(wd > 0, wd, 1.0)
    mu = np.where(wd > 0, np.minimum(1.0, np.maximum(0.0, (l_hi - f_min) / safe)), 1.0)
    lo_star = np.maximum(hi - mu * widths, lo)
    widths2 = hi - lo_star
    l_lo = w @ lo_star
    wd2 = w * widths2
    safe2 = np.where(wd2 > 0, wd2, 1.0)
    nu = np.where(wd2 > 0, np.minimum(1.0, np.maximum(0.0, (f_ub - l_lo) / safe2)), 1.0)
    hi_star = np.minimum(lo_star + nu * widths2, hi)
    return lo_star, hi_star


def _mode_data(channel: EffectiveChannel, slot: tuple[int, ...], mode):
    """Per-mode gain arrays and the z -> feasibility closure.

    ``mode`` is a (q, i) pair for NOMA or None for SDMA.  Returns
    (users, weights_layout_fn, feas_fn, z_upper) where feas_fn maps a full
    z vector to (feasible, powers, spent-slack check handled inside).
    """
    b = list(slot)
    nb = len(b)
    if mode is not None:
        q, i = mode
        gqq = channel.gamma[q, q, b]
        gii = channel.gamma[i, i, b]
        giq = channel.gamma[i, q, b]
        gqi = channel.gamma[q, i, b]

        def feas(z: np.ndarray, p_r: float):
            res = min_power_noma(z[:nb], z[nb:], gqq, gii, giq, gqi, p_r)
            return res.feasible, res.min_powers

        def z_upper(p_r: float) -> np.ndarray:
            return np.concatenate([np.log2(1.0 + gqq * p_r), np.log2(1.0 + gii * p_r)])

        def z_init(p_r: float):
            # equal split per bin, tilted onto the SIC boundary where needed
            c = p_r / nb
            pq = np.full(nb, c / 2.0)
            pi = np.full(nb, c / 2.0)
            tilt = gqq * pq > gqi * pi
            denom = np.where(gqq + gqi > 0, gqq + gqi, 1.0)
            pq = np.where(tilt, c * gqi / denom, pq)
            pi = np.where(tilt, c - pq, pi)
            z = np.concatenate(
                [np.log2(1.0 + gqq * pq), np.log2(1.0 + gii * pi / (giq * pq + 1.0))]
            )
            return z, np.vstack([pq, pi])

        return (q, i), feas, z_upper, z_init, nb
    Q = channel.Q
    gamma_slot = channel.gamma[:, :, b]

    def feas(z: np.ndarray, p_r: float):
        res = min_power_sdma(z.reshape(Q, nb), gamma_slot, p_r)
        return res.feasible, res.min_powers

    def z_upper(p_r: float) -> np.ndarray:
        return np.log2(1.0 + np.diagonal(gamma_slot).T.reshape(-1) * p_r)

    def z_init(p_r: float):
        p = np.full((Q, nb), p_r / (Q * nb))
        sinr = np.empty((Q, nb))
        for q in range(Q):
            interf = sum(
                gamma_slot[q, i, :] * p[i, :] for i in range(Q) if i != q
            )
            sinr[q, :] = gamma_slot[q, q, :] * p[q, :] / (interf + 1.0)
        return np.log2(1.0 + sinr).reshape(-1), p

    return tuple(range(Q)), feas, z_upper, z_init, nb


def brb_maximize(
    channel: EffectiveChannel,
    slot: tuple[int, ...],
    mode,
    alpha: np.ndarray,
    p_r: float,
    eps: float,
    max_boxes: int = 50000,
    trace: list | None = None,
) -> BrbOutcome:
    """Maximize the weighted sum of per-bin rates on one slot, one mode.

    Guarantees value >= optimum / (1 + eps) when it reports convergence.
    ``mode`` is a (q, i) NOMA pair (q strong) or None for SDMA.
    """
    users, feas, z_upper, z_init, nb = _mode_data(channel, slot, mode)
    n_users = len(users)
    w = np.repeat([alpha[u] for u in users], nb) / channel.MN
    K = n_users * nb

    if p_r <= 0:
        return BrbOutcome(0.0, 0.0, np.zeros((n_users, nb)), np.zeros(K), 0, True)

    z0 = z_upper(p_r)
    if float(np.dot(w, z0)) <= 0:
        return BrbOutcome(0.0, 0.0, np.zeros((n_users, nb)), np.zeros(K), 0, True)

    # warm incumbent: the equal-power point is feasible by construction and
    # makes the (1+eps) gap close orders of magnitude sooner
    z_w, p_w = z_init(p_r)
    f_min = float(np.dot(w, z_w))
    z_best = z_w
    p_best = p_w

    heap: list[tuple[float, int, BrbBox]] = []
    counter = 0
    root = BrbBox(np.zeros(K), z0, float(np.dot(w, z0)))
    heapq.heappush(heap, (-root.f_ub, counter, root))
    iterations = 0
    converged = False
    f_max = root.f_ub

    while heap and iterations < max_boxes:
        neg_ub, _, box = heapq.heappop(heap)
        f_max = -neg_ub
        if f_max <= (1.0 + eps) * f_min:
            converged = True
            break
        iterations += 1
        hi1, lo2 = branch_box(box)
        children = [
            (box.lo, hi1, min(box.f_ub, float(np.dot(w, hi1))), False),
            (lo2, box.hi, min(box.f_ub, float(np.dot(w, box.hi))), True),
        ]
        for lo, hi, ub, check_lower in children:
            if ub <= f_min:
                continue
            lo_s, hi_s = reduce_box(lo, hi, w, f_min, ub)
            if np.any(hi_s < lo_s - 1e-15):
                continue
            if check_lower:
                ok, powers = feas(lo_s, p_r)
                if not ok:
                    continue
                val = float(np.dot(w, lo_s))
                if val > f_min:
                    f_min = val
                    z_best = lo_s.copy()
                    p_best = powers
            ub_s = min(ub, float(np.dot(w, hi_s)))
            if ub_s <= f_min:
                continue
            counter += 1
            heapq.heappush(heap, (-ub_s, counter, BrbBox(lo_s, hi_s, ub_s)))
        if trace is not None:
            trace.append((iterations, f_min, f_max, len(heap)))

    if not heap:
        f_max = f_min
        converged = True
    elif not converged:
        f_max = max(f_min, -heap[0][0])
        converged = f_max <= (1.0 + eps) * f_min

    return BrbOutcome(f_min, f_max, p_best, z_best, iterations, converged)


@dataclass
class RsSolution:
    value: float
    mode: tuple[int, int] | None
    powers: np.ndarray  # [Q, nb] in global user indexing


def solve_rs_optimal(
    channel: EffectiveChannel,
    slot: tuple[int, ...],
    alpha: np.ndarray,
    p_r: float,
    eps: float,
    max_boxes: int = 50000,
) -> RsSolution:
    """Best access mode and powers for one slot at budget p_r.

    Tries every ordered-by-index NOMA pair plus SDMA and keeps the largest
    certified value.
    """
    Q = channel.Q
    nb = len(slot)
    best_val = -np.inf
    best_mode = None
    best_p = np.zeros((Q, nb))
    modes = [(q, i) for q in range(Q) for i in range(q + 1, Q)] + [None]
    for mode in modes:
        out = brb_maximize(channel, slot, mode, alpha, p_r, eps, max_boxes=max_boxes)
        if out.value > best_val:
            best_val = out.value
            best_mode = mode
            full = np.zeros((Q, nb))
            if mode is None:
                full[:, :] = out.powers
            else:
                q, i = mode
                full[q, :] = out.powers[0]
                full[i, :] = out.powers[1]
            best_p = full
    return RsSolution(best_val, best_mode, best_p)


@dataclass
class DpResult:
    value: float
    plan: AccessPlan
    power: PowerAllocation
    energy_path: tuple[float, ...]  # cumulative power at each slot boundary


def dp_solve(
    channel: EffectiveChannel,
    partition: RsPartition,
    alpha: np.ndarray,
    P: float,
    delta_p: int,
    eps: float,
    c_min: np.ndarray | None = None,
    max_boxes: int = 50000,
) -> DpResult:
    """Joint plan/power optimum over the discretized cumulative-power path.

    The state after slot r is the cumulative power spent; the per-slot gain
    depends only on the increment, so sub-solves are memoized by (slot,
    increment index).  Requires all rate floors at zero: the per-slot
    decomposition cannot carry coupled floor constraints.
    """
    if delta_p <= 0:
        raise ValueError("delta_p must be a positive number of grid steps")
    if c_min is not None and np.any(np.asarray(c_min) > 0):
        raise ValueError("dp_solve requires zero rate floors")

    R = partition.R
    Q = channel.Q
    grid = np.linspace(0.0, P, delta_p + 1)

    memo: dict[tuple[int, int], RsSolution] = {}

    def slot_gain(r: int, steps: int) -> RsSolution:
        key = (r, steps)
        if key not in memo:
            memo[key] = solve_rs_optimal(
                channel, partition.slots[r], alpha, float(grid[steps]), eps, max_boxes
            )
        return memo[key]

    NEG = -np.inf
    V = np.full((R + 1, delta_p + 1), NEG)
    V[0, 0] = 0.0
    choice = np.full((R + 1, delta_p + 1), -1, dtype=int)
    for r in range(1, R + 1):
        for j in range(delta_p + 1):
            best = NEG
            arg = -1
            for jp in range(j + 1):
                if V[r - 1, jp] == NEG:
                    continue
                cand = V[r - 1, jp] + slot_gain(r - 1, j - jp).value
                if cand > best:
                    best = cand
                    arg = jp
            V[r, j] = best
            choice[r, j] = arg

    # backtrack from full budget spent
    j = delta_p
    pairs: list[tuple[int, int] | None] = [None] * R
    power = np.zeros((Q, channel.MN))
    path = [grid[delta_p]]
    for r in range(R, 0, -1):
        jp = int(choice[r, j])
        sol = slot_gain(r - 1, j - jp)
        pairs[r - 1] = sol.mode
        idx = list(partition.slots[r - 1])
        power[:, idx] = sol.powers
        j = jp
        path.append(grid[j])
    path.reverse()

    return DpResult(
        value=float(V[R, delta_p]),
        plan=AccessPlan(tuple(pairs)),
        power=PowerAllocation(power),
        energy_path=tuple(float(x) for x in path),
    )

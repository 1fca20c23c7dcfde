"""Suboptimal solver: successive convex approximation inside, simulated
annealing over the per-slot SDMA/NOMA access bits outside.

For a fixed access bit-vector (1 = SDMA slot, 0 = NOMA slot) the inner
routine relaxes the NOMA pair indicators, iterates the linearized convex
subproblem to a stationary point, rounds the indicators, repairs coverage
if a floored user lost every slot, and re-solves powers with the indicators
clamped.  The annealer flips one bit at a time, never revisits a bit
pattern, and cools geometrically.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import EffectiveChannel
from .feasopt import ScaLinearizationPoint, ScaSolution, ScaSubproblemSolver
from .rates import AccessPlan, PowerAllocation, plan_weighted_sum, user_total_rate
from .scenario import RsPartition

__all__ = [
    "ScaResult",
    "sca_solve_p3",
    "sca_power_allocation",
    "flip_random_rs",
    "sa_accept_and_update",
    "sa_search",
    "SaOutcome",
]

_RATE_FLOOR_TOL = 1e-6


@dataclass
class ScaResult:
    feasible: bool
    value: float
    plan: AccessPlan | None = None
    power: PowerAllocation | None = None
    iterations: int = 0


def _iterate_sca(
    solver: ScaSubproblemSolver,
    start: ScaLinearizationPoint,
    tol: float,
    max_iters: int,
    trace: list | None = None,
):
    """Run the linearize/solve loop to objective stagnation.

    The loop is monotone by construction: an iterate whose objective drops
    below the previous one (solver jitter at a stationary point) ends the
    loop with the previous solution kept.
    """
    pt = start
    prev_obj = solver.point_objective(start)
    last = ScaSolution(
        status="start", objective=prev_obj, a_n=start.a_n, p=start.p,
        pt_nq=start.pt_nq, pt_ni=start.pt_ni, nu_n=start.nu_n, nu_s=start.nu_s,
    )
    for it in range(1, max_iters + 1):
        sol = solver.solve(pt)
        if not sol.ok:
            return last, it
        if sol.objective < prev_obj:
            return last, it
        last = sol
        if trace is not None:
            trace.append(sol.objective)
        pt = ScaLinearizationPoint(
            a_n=sol.a_n, p=sol.p, pt_nq=sol.pt_nq, pt_ni=sol.pt_ni,
            nu_n=sol.nu_n, nu_s=sol.nu_s,
        )
        denom = max(1.0, abs(prev_obj))
        if abs(sol.objective - prev_obj) / denom < tol:
            return sol, it
        prev_obj = sol.objective
    return last, max_iters


def _round_access(solver: ScaSubproblemSolver, a_n: np.ndarray) -> np.ndarray:
    """Per NOMA slot keep the largest pair indicator; SDMA slots get all zeros."""
    out = np.zeros_like(a_n)
    for r in range(solver.R):
        if solver.a_s[r] == 0 and solver.P2:
            out[r, int(np.argmax(a_n[r, :]))] = 1.0
    return out


def _repair_coverage(solver: ScaSubproblemSolver, a_bin: np.ndarray, a_n: np.ndarray) -> np.ndarray:
    """Reassign slots so every rate-floored user keeps at least one slot.

    An uncovered user takes over the NOMA slot whose relaxed indicators
    liked it most, moving that slot to the user's strongest pair.
    """
    a_bin = a_bin.copy()
    Q = solver.Q
    noma_rs = [r for r in range(solver.R) if solver.a_s[r] == 0]
    for q in range(Q):
        if solver.c_min[q] <= 0:
            continue
        covered = solver.a_s.sum() > 0 or any(
            a_bin[r, j] == 1 and q in solver.pairs[j]
            for r in noma_rs
            for j in range(solver.P2)
        )
        if covered:
            continue
        idx = [j for j, pr in enumerate(solver.pairs) if q in pr]
        if not idx or not noma_rs:
            continue
        # pick the slot where q's pairs carried the most relaxed weight
        r_best = max(noma_rs, key=lambda r: float(a_n[r, idx].sum()))
        j_best = idx[int(np.argmax(a_n[r_best, idx]))]
        a_bin[r_best, :] = 0.0
        a_bin[r_best, j_best] = 1.0
    return a_bin


def _extract(
    solver: ScaSubproblemSolver,
    partition: RsPartition,
    a_bin: np.ndarray,
    sol,
) -> tuple[AccessPlan, PowerAllocation]:
    pairs: list[tuple[int, int] | None] = []
    for r in range(solver.R):
        if solver.a_s[r] == 1:
            pairs.append(None)
        else:
            pairs.append(solver.pairs[int(np.argmax(a_bin[r, :]))])
    plan = AccessPlan(tuple(pairs))
    power = np.zeros((solver.Q, solver.MN))
    for r, slot in enumerate(partition.slots):
        idx = list(slot)
        pair = plan.pairs[r]
        if pair is None:
            power[:, idx] = sol.p[:, idx]
        else:
            q, i = pair
            power[q, idx] = sol.p[q, idx]
            power[i, idx] = sol.p[i, idx]
    return plan, PowerAllocation(power)


def sca_solve_p3(
    a_s: np.ndarray,
    channel: EffectiveChannel,
    partition: RsPartition,
    alpha: np.ndarray,
    c_min: np.ndarray,
    P: float,
    eta: float,
    solver: ScaSubproblemSolver | None = None,
    tol: float = 1e-4,
    max_iters: int = 30,
    obj_trace: list | None = None,
) -> ScaResult:
    """Best plan/powers for a fixed SDMA access vector via SCA.

    Returns an infeasible verdict when the convex machinery fails or the
    rounded solution misses a rate floor or slot coverage.  ``obj_trace``
    collects the inner objective value of every accepted iterate.
    """
    a_s = np.asarray(a_s, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    c_min = np.asarray(c_min, dtype=float)

    if solver is None:
        solver = ScaSubproblemSolver(channel, partition, alpha, c_min, P, eta)
    solver.set_access(a_s)

    if solver.P2 == 0:
        if np.any(a_s == 0):
            # single user cannot form a pair: NOMA slots are unusable
            return ScaResult(False, -np.inf)
        solver.set_access(a_s)
    else:
        solver.set_clamp(None)

    sol, it1 = _iterate_sca(solver, solver.initial_point(), tol, max_iters, trace=obj_trace)
    if sol is None:
        return ScaResult(False, -np.inf, iterations=it1)

    if solver.P2:
        a_bin = _round_access(solver, sol.a_n)
        a_bin = _repair_coverage(solver, a_bin, sol.a_n)
        solver.set_clamp(a_bin)
        sol2, it2 = _iterate_sca(solver, solver.feasible_point(a_bin), tol, max_iters)
        if sol2 is None:
            # binary clamp can be infeasible even when the relaxation was not
            solver.set_clamp(None)
            return ScaResult(False, -np.inf, iterations=it1 + it2)
        solver.set_clamp(None)
    else:
        a_bin = np.zeros((solver.R, 0))
        sol2, it2 = sol, 0

    plan, power = _extract(solver, partition, a_bin, sol2)
    value = plan_weighted_sum(plan, channel, power, alpha, partition)
    for q in range(channel.Q):
        if c_min[q] > 0:
            if not plan.covers(q):
                return ScaResult(False, -np.inf, plan, power, it1 + it2)
            if user_total_rate(plan, power, channel, partition, q) < c_min[q] - _RATE_FLOOR_TOL:
                return ScaResult(False, -np.inf, plan, power, it1 + it2)
    return ScaResult(True, float(value), plan, power, it1 + it2)


def sca_power_allocation(
    plan: AccessPlan,
    channel: EffectiveChannel,
    partition: RsPartition,
    alpha: np.ndarray,
    c_min: np.ndarray,
    P: float,
    eta: float,
    solver: ScaSubproblemSolver | None = None,
    tol: float = 1e-4,
    max_iters: int = 30,
) -> ScaResult:
    """Power-only SCA with the whole access plan fixed in advance."""
    alpha = np.asarray(alpha, dtype=float)
    c_min = np.asarray(c_min, dtype=float)
    if solver is None:
        solver = ScaSubproblemSolver(channel, partition, alpha, c_min, P, eta)
    solver.set_access(np.asarray(plan.a_s(), dtype=float))
    a_bin = np.zeros((solver.R, solver.P2))
    for r, pair in enumerate(plan.pairs):
        if pair is not None:
            a_bin[r, solver.pairs.index(pair)] = 1.0
    if solver.P2:
        solver.set_clamp(a_bin)
    sol, its = _iterate_sca(solver, solver.feasible_point(a_bin), tol, max_iters)
    if solver.P2:
        solver.set_clamp(None)
    if sol is None:
        return ScaResult(False, -np.inf, iterations=its)
    _, power = _extract(solver, partition, a_bin, sol)
    value = plan_weighted_sum(plan, channel, power, alpha, partition)
    for q in range(channel.Q):
        if c_min[q] > 0:
            if not plan.covers(q):
                return ScaResult(False, -np.inf, plan, power, its)
            if user_total_rate(plan, power, channel, partition, q) < c_min[q] - _RATE_FLOOR_TOL:
                return ScaResult(False, -np.inf, plan, power, its)
    return ScaResult(True, float(value), plan, power, its)


# --- simulated annealing over the access bits -----------------------------


def flip_random_rs(a_s: np.ndarray, rng: np.random.Generator, visited: set) -> np.ndarray | None:
    """Flip one uniformly chosen bit, redrawing until the pattern is new.

    Returns None when every single-flip neighbour was already visited.
    """
    R = a_s.size
    candidates = list(rng.permutation(R))
    for r in candidates:
        nxt = a_s.copy()
        nxt[r] = 1 - nxt[r]
        if tuple(int(x) for x in nxt) not in visited:
            return nxt
    return None


def sa_accept_and_update(
    cand_value: float,
    best_value: float,
    temperature: float,
    rng: np.random.Generator,
) -> tuple[bool, bool]:
    """(improves, keep_exploring): accept as incumbent on non-degradation;
    otherwise keep exploring from the candidate with the Metropolis
    probability exp((cand - best) / T)."""
    if best_value <= cand_value:
        return True, True
    prob = float(np.exp((cand_value - best_value) / max(temperature, 1e-300)))
    return False, bool(rng.random() < prob)


@dataclass
class SaOutcome:
    feasible: bool
    value: float
    plan: AccessPlan | None
    power: PowerAllocation | None
    a_s: np.ndarray
    evaluations: int
    trace: list | None = None


def sa_search(
    channel: EffectiveChannel,
    partition: RsPartition,
    alpha: np.ndarray,
    c_min: np.ndarray,
    P: float,
    eta: float,
    zeta: float = 0.92,
    rng: np.random.Generator | None = None,
    max_iters: int | None = None,
    temp_floor: float = 1e-3,
    keep_trace: bool = False,
) -> SaOutcome:
    """Anneal over SDMA access bit-vectors, scoring each with `sca_solve_p3`.

    Starts from all-SDMA; the all-NOMA complement is the first move.  Never
    re-evaluates a visited pattern; stops on neighbourhood exhaustion, the
    temperature floor, or the iteration cap.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    R = partition.R
    if max_iters is None:
        max_iters = 4 * (2**min(R, 12))

    solver = ScaSubproblemSolver(channel, partition, alpha, c_min, P, eta)

    incumbent = np.ones(R, dtype=float)
    visited = {tuple(int(x) for x in incumbent)}
    res = sca_solve_p3(incumbent, channel, partition, alpha, c_min, P, eta, solver=solver)
    best_value = res.value if res.feasible else -np.inf
    best = res
    best_a = incumbent.copy()
    evaluations = 1
    trace = [] if keep_trace else None

    current = np.zeros(R, dtype=float)  # first explored neighbour: all NOMA
    temperature = max(best_value if np.isfinite(best_value) else 0.0, 10.0)

    it = 0
    while it < max_iters and temperature > temp_floor:
        it += 1
        key = tuple(int(x) for x in current)
        if key in visited:
            nxt = flip_random_rs(current, rng, visited)
            if nxt is None:
                break
            current = nxt
            key = tuple(int(x) for x in current)
        visited.add(key)
        res = sca_solve_p3(current, channel, partition, alpha, c_min, P, eta, solver=solver)
        cand_value = res.value if res.feasible else -np.inf
        evaluations += 1
        improves, keep = sa_accept_and_update(cand_value, best_value, temperature, rng)
        if improves:
            best_value = cand_value
            best = res
            best_a = current.copy()
        elif not keep:
            current = best_a.copy()
        if trace is not None:
            trace.append((it, tuple(int(x) for x in current), cand_value, best_value, temperature))
        temperature *= zeta
        nxt = flip_random_rs(current, rng, visited)
        if nxt is None:
            break
        current = nxt

    feasible = np.isfinite(best_value) and best.feasible
    return SaOutcome(
        feasible=feasible,
        value=float(best_value) if feasible else -np.inf,
        plan=best.plan if feasible else None,
        power=best.power if feasible else None,
        a_s=best_a,
        evaluations=evaluations,
        trace=trace,
    )

"""Structured convex subroutines.

Two kinds of machinery live here:

* closed-form minimal-power feasibility checks used inside the global
  branch-reduce-bound loop (forward substitution for a NOMA pair, the
  Perron-Frobenius fixed point for SDMA), with a phase-I linear-program
  fallback when the SIC-order row binds;
* the convex inner subproblem of the SCA loop (continuous access variables
  with big-M coupling, linearized difference-of-convex SINR rows), solved
  through cvxpy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

import cvxpy as cp

from .channel import EffectiveChannel
from .scenario import RsPartition

__all__ = [
    "FeasibilityResult",
    "min_power_noma",
    "min_power_sdma",
    "ScaLinearizationPoint",
    "ScaSubproblemSolver",
]

_LN2 = float(np.log(2.0))
_FEAS_TOL = 1e-12


@dataclass(frozen=True)
class FeasibilityResult:
    """Verdict of a minimal-power check on one slot.

    ``min_powers`` has one row per involved user, columns following the slot
    bin order; ``slack`` is the unused part of the slot budget.
    """

    feasible: bool
    min_powers: np.ndarray | None
    slack: float
    users: tuple[int, ...] = ()


def min_power_noma(
    z_q: np.ndarray,
    z_i: np.ndarray,
    gqq: np.ndarray,
    gii: np.ndarray,
    giq: np.ndarray,
    gqi: np.ndarray,
    p_r: float,
) -> FeasibilityResult:
    """Minimal powers meeting per-bin rate targets (z_q, z_i) for a NOMA pair.

    Forward substitution gives the componentwise-minimal point; the SIC
    decoding-order row is checked there and, when it fails with budget to
    spare, a phase-I linear program re-solves with the row explicit.
    """
    z_q = np.asarray(z_q, dtype=float)
    z_i = np.asarray(z_i, dtype=float)
    cq = np.exp2(z_q) - 1.0
    ci = np.exp2(z_i) - 1.0
    nb = z_q.size

    if np.any((cq > 0) & (gqq <= 0)) or np.any((ci > 0) & (gii <= 0)):
        return FeasibilityResult(False, None, 0.0)

    pq = np.where(cq > 0, cq / np.where(gqq > 0, gqq, 1.0), 0.0)
    pi = np.where(ci > 0, ci * (giq * pq + 1.0) / np.where(gii > 0, gii, 1.0), 0.0)
    total = float(pq.sum() + pi.sum())
    tol = 1e-9 * (1.0 + p_r)

    sic_ok = np.all(gqq * pq <= gqi * pi + tol)
    if sic_ok:
        if total <= p_r + tol:
            return FeasibilityResult(True, np.vstack([pq, pi]), p_r - total, ())
        return FeasibilityResult(False, None, p_r - total)

    if total > p_r + tol:
        # SIC repair only raises p_i, so the budget can only get worse
        return FeasibilityResult(False, None, p_r - total)

    # phase-I LP with the SIC row explicit; bins stay separable, the budget
    # couples them, and minimizing total power decides feasibility exactly
    n = 2 * nb
    c = np.ones(n)
    A_ub, b_ub = [], []
    for b in range(nb):
        rq = np.zeros(n)
        rq[b] = -1.0
        A_ub.append(rq)
        b_ub.append(-(cq[b] / gqq[b] if cq[b] > 0 else 0.0))
        ri = np.zeros(n)
        ri[nb + b] = -gii[b]
        ri[b] = ci[b] * giq[b]
        A_ub.append(ri)
        b_ub.append(-ci[b])
        rs = np.zeros(n)
        rs[b] = gqq[b]
        rs[nb + b] = -gqi[b]
        A_ub.append(rs)
        b_ub.append(0.0)
    res = linprog(c, A_ub=np.array(A_ub), b_ub=np.array(b_ub), bounds=(0, None), method="highs")
    if not res.success or res.fun > p_r + tol:
        return FeasibilityResult(False, None, p_r - (res.fun if res.success else np.inf))
    powers = res.x.reshape(2, nb)
    return FeasibilityResult(True, powers, p_r - float(res.fun), ())


def min_power_sdma(
    z: np.ndarray,
    gamma_slot: np.ndarray,
    p_r: float,
) -> FeasibilityResult:
    """Minimal powers meeting per-(user, bin) targets z under mutual interference.

    ``gamma_slot`` is the [Q, Q, nb] gain tensor restricted to the slot.
    Per bin the minimal point is the fixed point p = D (F p + 1); it exists
    with p >= 0 iff the spectral radius of D F is below one.
    """
    z = np.asarray(z, dtype=float)
    Q, nb = z.shape
    cmat = np.exp2(z) - 1.0
    tol = 1e-9 * (1.0 + p_r)

    gqq = np.diagonal(gamma_slot).T  # [Q, nb]
    if np.any((cmat > 0) & (gqq <= 0)):
        return FeasibilityResult(False, None, 0.0)
    d = np.where(cmat > 0, cmat / np.where(gqq > 0, gqq, 1.0), 0.0)  # [Q, nb]
    F = np.moveaxis(gamma_slot, 2, 0).copy()  # [nb, Q, Q]
    F[:, np.arange(Q), np.arange(Q)] = 0.0
    DF = d.T[:, :, None] * F
    if np.max(np.abs(np.linalg.eigvals(DF))) >= 1.0 - 1e-12:
        return FeasibilityResult(False, None, 0.0)
    p_star = np.linalg.solve(np.eye(Q)[None, :, :] - DF, d.T[:, :, None])[:, :, 0]
    if np.any(p_star < -tol):
        return FeasibilityResult(False, None, 0.0)
    powers = np.maximum(p_star, 0.0).T
    total = float(powers.sum())
    if total > p_r + tol:
        return FeasibilityResult(False, None, p_r - total)
    return FeasibilityResult(True, powers, p_r - total)


# --- SCA inner subproblem -------------------------------------------------


@dataclass
class ScaLinearizationPoint:
    """Values at which the difference-of-convex rows are linearized."""

    a_n: np.ndarray      # [R, P2]
    p: np.ndarray        # [Q, MN]
    pt_nq: np.ndarray    # [P2, MN]
    pt_ni: np.ndarray    # [P2, MN]
    nu_n: np.ndarray     # [P2, MN]
    nu_s: np.ndarray     # [Q, MN]


@dataclass
class ScaSolution:
    status: str
    objective: float = -np.inf
    a_n: np.ndarray | None = None
    p: np.ndarray | None = None
    pt_nq: np.ndarray | None = None
    pt_ni: np.ndarray | None = None
    nu_n: np.ndarray | None = None
    nu_s: np.ndarray | None = None

    @property
    def ok(self) -> bool:
        return self.status in ("optimal", "optimal_inaccurate")


class ScaSubproblemSolver:
    """Compiled convex subproblem, re-solvable across SCA/SA iterations.

    The problem is built once per channel realization; the SDMA access
    vector, the access-variable clamp bounds and the linearization point
    enter as cvxpy Parameters so repeated solves reuse the canonicalization.
    """

    def __init__(
        self,
        channel: EffectiveChannel,
        partition: RsPartition,
        alpha: np.ndarray,
        c_min: np.ndarray,
        P: float,
        eta: float,
    ):
        self.channel = channel
        self.partition = partition
        self.alpha = np.asarray(alpha, dtype=float)
        self.c_min = np.asarray(c_min, dtype=float)
        self.P = float(P)
        self.eta = float(eta)

        Q = channel.Q
        MN = channel.MN
        R = partition.R
        self.pairs = [(q, i) for q in range(Q) for i in range(q + 1, Q)]
        P2 = len(self.pairs)
        self.Q, self.MN, self.R, self.P2 = Q, MN, R, P2
        self.rs_of_bin = np.array([partition.slot_of_bin(b) for b in range(MN)])

        gamma = channel.gamma
        scale = 1.0 / (MN * _LN2)

        # variables
        p = cp.Variable((Q, MN), nonneg=True, name="p")
        nu_s = cp.Variable((Q, MN), nonneg=True, name="nu_s")
        if P2:
            a_n = cp.Variable((R, P2), name="a_n")
            pt_nq = cp.Variable((P2, MN), nonneg=True, name="pt_nq")
            pt_ni = cp.Variable((P2, MN), nonneg=True, name="pt_ni")
            nu_n = cp.Variable((P2, MN), nonneg=True, name="nu_n")
        else:
            a_n = pt_nq = pt_ni = nu_n = None
        self._vars = (a_n, p, pt_nq, pt_ni, nu_n, nu_s)

        # parameters; all coefficients of the difference-of-convex rows are
        # pre-scaled by 1/s (s = the convex square's value at the previous
        # iterate) so the conic data stays O(1) near the solution
        self.p_as = cp.Parameter(R, name="a_s", nonneg=True)
        self.p_as_bin = cp.Parameter(MN, name="a_s_bins", nonneg=True)
        self.p_invs = cp.Parameter((Q, MN), name="inv_sdma", nonneg=True)
        self.p_gins = cp.Parameter((Q * Q, MN), name="gin_sdma", nonneg=True)
        self.p_ks = cp.Parameter((Q, MN), name="k_sdma")
        self.p_cnus = cp.Parameter((Q, MN), name="cnu_sdma")
        self.p_ci = cp.Parameter((Q * Q, MN), name="ci_sdma")
        self.p_rhss = cp.Parameter((Q, MN), name="rhs_sdma", nonneg=True)
        if P2:
            self.p_alb = cp.Parameter((R, P2), name="a_lb")
            self.p_aub = cp.Parameter((R, P2), name="a_ub")
            self.p_aprev = cp.Parameter((R, P2), name="a_prev")
            self.p_glin = cp.Parameter(name="g_lin_const")
            self.p_invn = cp.Parameter((P2, MN), name="inv_noma", nonneg=True)
            self.p_ginn = cp.Parameter((P2, MN), name="gin_noma", nonneg=True)
            self.p_kn = cp.Parameter((P2, MN), name="k_noma")
            self.p_cnun = cp.Parameter((P2, MN), name="cnu_noma")
            self.p_cpqn = cp.Parameter((P2, MN), name="cpq_noma")
            self.p_rhsn = cp.Parameter((P2, MN), name="rhs_noma", nonneg=True)

        # physical caps tighten the conic relaxation
        gdiag = np.array([gamma[q, q, :] for q in range(Q)])
        cons = [nu_s <= gdiag * self.P, p <= self.P]
        obj_terms = []

        # SDMA rate terms and DC rows (nu_s forced to 0 on NOMA slots)
        for q in range(Q):
            in_terms = [
                cp.multiply(self.p_gins[q * Q + i, :], p[i, :])
                for i in range(Q)
                if i != q
            ]
            inner = cp.multiply(self.p_invs[q, :], nu_s[q, :]) + (
                sum(in_terms) if in_terms else 0.0
            ) + self.p_invs[q, :]
            ci_terms = [
                cp.multiply(self.p_ci[q * Q + i, :], p[i, :])
                for i in range(Q)
                if i != q
            ]
            vlb = self.p_ks[q, :] + cp.multiply(self.p_cnus[q, :], nu_s[q, :]) + (
                sum(ci_terms) if ci_terms else 0.0
            )
            cons.append(cp.square(inner) - vlb <= cp.multiply(self.p_rhss[q, :], p[q, :]))
            obj_terms.append(self.alpha[q] * scale * cp.sum(cp.log1p(nu_s[q, :])))

        rate_q = [scale * cp.sum(cp.log1p(nu_s[q, :])) for q in range(Q)]

        if P2:
            gvv_all = np.array([gamma[v_, v_, :] for (_, v_) in self.pairs])
            cons += [nu_n <= gvv_all * self.P]
            a_bins = a_n[self.rs_of_bin, :]  # [MN, P2]
            for j, (u, v_) in enumerate(self.pairs):
                guu = gamma[u, u, :]
                gvv = gamma[v_, v_, :]
                gvu = gamma[v_, u, :]
                guv = gamma[u, v_, :]
                aj = a_bins[:, j]
                # big-M coupling (the a*P cap removes phantom rate at a = 0)
                cons += [
                    pt_nq[j, :] <= p[u, :],
                    pt_nq[j, :] >= p[u, :] - (1.0 - aj) * self.P,
                    pt_nq[j, :] <= aj * self.P,
                    pt_ni[j, :] <= p[v_, :],
                    pt_ni[j, :] >= p[v_, :] - (1.0 - aj) * self.P,
                    pt_ni[j, :] <= aj * self.P,
                ]
                # SIC decoding order in tilde-power image
                cons.append(cp.multiply(guu, pt_nq[j, :]) <= cp.multiply(guv, pt_ni[j, :]))
                # weak-user SINR as a linearized DC row
                inner = (
                    cp.multiply(self.p_invn[j, :], nu_n[j, :])
                    + cp.multiply(self.p_ginn[j, :], pt_nq[j, :])
                    + self.p_invn[j, :]
                )
                vlb = (
                    self.p_kn[j, :]
                    + cp.multiply(self.p_cnun[j, :], nu_n[j, :])
                    + cp.multiply(self.p_cpqn[j, :], pt_nq[j, :])
                )
                cons.append(
                    cp.square(inner) - vlb <= cp.multiply(self.p_rhsn[j, :], pt_ni[j, :])
                )
                obj_terms.append(
                    self.alpha[u] * scale * cp.sum(cp.log1p(cp.multiply(guu, pt_nq[j, :])))
                )
                obj_terms.append(self.alpha[v_] * scale * cp.sum(cp.log1p(nu_n[j, :])))
                rate_q[u] = rate_q[u] + scale * cp.sum(cp.log1p(cp.multiply(guu, pt_nq[j, :])))
                rate_q[v_] = rate_q[v_] + scale * cp.sum(cp.log1p(nu_n[j, :]))

            cons += [a_n >= self.p_alb, a_n <= self.p_aub]
            cons.append(cp.sum(a_n, axis=1) == 1.0 - self.p_as)
            # penalty pushing the relaxed binaries to {0, 1}
            obj_terms.append(
                self.eta
                * (2.0 * cp.sum(cp.multiply(self.p_aprev, a_n)) - self.p_glin - cp.sum(a_n))
            )
            # coverage: every floored user is scheduled at least once
            self.p_as_total = cp.Parameter(name="a_s_total", nonneg=True)
            for q in range(Q):
                if self.c_min[q] > 0:
                    idx = [j for j, pr in enumerate(self.pairs) if q in pr]
                    if idx:
                        cons.append(cp.sum(a_n[:, idx]) + self.p_as_total >= 1.0)

        # rate floors
        for q in range(Q):
            if self.c_min[q] > 0:
                cons.append(rate_q[q] >= self.c_min[q])

        # budget
        spent = cp.sum(cp.multiply(p, cp.vstack([self.p_as_bin] * Q)))
        if P2:
            spent = spent + cp.sum(pt_nq) + cp.sum(pt_ni)
        cons.append(spent <= self.P)

        self.problem = cp.Problem(cp.Maximize(sum(obj_terms)), cons)
        self._rate_q = rate_q
        self.set_access(np.ones(R, dtype=float))
        if P2:
            self.set_clamp(None)

    # -- parameter plumbing --

    def set_access(self, a_s: np.ndarray) -> None:
        a_s = np.asarray(a_s, dtype=float)
        self.a_s = a_s
        self.p_as.value = a_s
        mask = a_s[self.rs_of_bin]
        self.p_as_bin.value = mask
        gs = np.zeros((self.Q * self.Q, self.MN))
        for q in range(self.Q):
            for i in range(self.Q):
                gs[q * self.Q + i, :] = self.channel.gamma[q, i, :] * mask
        self._gs = gs
        if self.P2:
            self.p_as_total.value = float(a_s.sum())

    def set_clamp(self, a_fixed: np.ndarray | None) -> None:
        """Clamp the NOMA access variables to fixed binaries, or free them in [0, 1]."""
        if not self.P2:
            return
        if a_fixed is None:
            lb = np.zeros((self.R, self.P2))
            ub = np.ones((self.R, self.P2))
        else:
            lb = ub = np.asarray(a_fixed, dtype=float)
        self.p_alb.value = lb
        self.p_aub.value = ub

    def initial_point(self) -> ScaLinearizationPoint:
        """Symmetric equal-power start consistent with the current access vector."""
        Q, MN, R, P2 = self.Q, self.MN, self.R, self.P2
        p0 = np.full((Q, MN), self.P / (Q * MN))
        a0 = np.zeros((R, P2))
        if P2:
            for r in range(R):
                if self.a_s[r] == 0:
                    a0[r, :] = 1.0 / P2
        pt_nq = np.zeros((P2, MN))
        pt_ni = np.zeros((P2, MN))
        nu_n = np.zeros((P2, MN))
        for j, (u, v_) in enumerate(self.pairs):
            aj = a0[self.rs_of_bin, j]
            pt_nq[j, :] = aj * p0[u, :]
            pt_ni[j, :] = aj * p0[v_, :]
            gvv = self.channel.gamma[v_, v_, :]
            gvu = self.channel.gamma[v_, u, :]
            nu_n[j, :] = gvv * pt_ni[j, :] / (gvu * pt_nq[j, :] + 1.0)
        nu_s = np.zeros((Q, MN))
        mask = self.a_s[self.rs_of_bin]
        for q in range(Q):
            interf = np.zeros(MN)
            for i in range(Q):
                if i != q:
                    interf += self.channel.gamma[q, i, :] * mask * p0[i, :]
            nu_s[q, :] = self.channel.gamma[q, q, :] * mask * p0[q, :] / (interf + 1.0)
        return ScaLinearizationPoint(a_n=a0, p=p0, pt_nq=pt_nq, pt_ni=pt_ni, nu_n=nu_n, nu_s=nu_s)

    def _floor_start(self, a_bin: np.ndarray):
        """Minimum powers meeting every rate floor, scaled up to the budget.

        Uniform scaling of a feasible allocation raises every SINR and keeps
        the SIC order, so the scaled point still satisfies the floors while
        spending the whole budget.  Returns None when the floors cannot be
        met this way.
        """
        Q, MN, P2 = self.Q, self.MN, self.P2
        gamma = self.channel.gamma
        sched: list[list[int]] = [[] for _ in range(Q)]
        slot_info = []
        for r, slot in enumerate(self.partition.slots):
            bins = list(slot)
            if self.a_s[r] == 1:
                for q in range(Q):
                    sched[q] += bins
                slot_info.append((bins, None))
            else:
                j = int(np.argmax(a_bin[r, :]))
                u, v_ = self.pairs[j]
                sched[u] += bins
                sched[v_] += bins
                slot_info.append((bins, (j, u, v_)))
        z = np.zeros((Q, MN))
        for q in range(Q):
            if self.c_min[q] > 0:
                if not sched[q]:
                    return None
                z[q, sched[q]] = self.c_min[q] * MN / len(sched[q])
        p = np.zeros((Q, MN))
        pt_nq = np.zeros((P2, MN))
        pt_ni = np.zeros((P2, MN))
        for bins, pair in slot_info:
            if pair is None:
                res = min_power_sdma(z[:, bins], gamma[:, :, bins], self.P)
                if not res.feasible:
                    return None
                p[:, bins] = res.min_powers
            else:
                j, u, v_ = pair
                res = min_power_noma(
                    z[u, bins], z[v_, bins],
                    gamma[u, u, bins], gamma[v_, v_, bins],
                    gamma[v_, u, bins], gamma[u, v_, bins], self.P,
                )
                if not res.feasible:
                    return None
                p[u, bins] = pt_nq[j, bins] = res.min_powers[0]
                p[v_, bins] = pt_ni[j, bins] = res.min_powers[1]
        total = p.sum()
        if total <= 0 or total > self.P:
            return None
        c = self.P / total
        return p * c, pt_nq * c, pt_ni * c

    def _floored_user_rates(self, a_bin: np.ndarray, p, pt_nq, pt_ni) -> np.ndarray:
        """True per-user rates of a candidate start point (floored users only)."""
        Q, MN = self.Q, self.MN
        gamma = self.channel.gamma
        scale = 1.0 / (MN * _LN2)
        rates = np.zeros(Q)
        mask = self.a_s[self.rs_of_bin]
        for q in range(Q):
            if self.c_min[q] <= 0:
                continue
            interf = np.zeros(MN)
            for i in range(Q):
                if i != q:
                    interf += gamma[q, i, :] * mask * p[i, :]
            nu = gamma[q, q, :] * mask * p[q, :] / (interf + 1.0)
            rates[q] = scale * float(np.log1p(nu).sum())
            for j, (u, v_) in enumerate(self.pairs):
                if q == u:
                    rates[q] += scale * float(np.log1p(gamma[u, u, :] * pt_nq[j, :]).sum())
                elif q == v_:
                    nu_w = gamma[v_, v_, :] * pt_ni[j, :] / (gamma[v_, u, :] * pt_nq[j, :] + 1.0)
                    rates[q] += scale * float(np.log1p(nu_w).sum())
        return rates

    def feasible_point(self, a_bin: np.ndarray) -> ScaLinearizationPoint:
        """A point satisfying every constraint when the access is the given
        binary matrix: equal power per slot, SIC-violating bins tilted onto
        the decoding-order boundary, SINR variables on the true surface.
        Falls back to a scaled minimum-power allocation when the equal-power
        split misses a rate floor (interference-limited regimes)."""
        Q, MN, R, P2 = self.Q, self.MN, self.R, self.P2
        gamma = self.channel.gamma
        p = np.zeros((Q, MN))
        pt_nq = np.zeros((P2, MN))
        pt_ni = np.zeros((P2, MN))
        per_rs = self.P / R
        for r, slot in enumerate(self.partition.slots):
            bins = list(slot)
            c = per_rs / len(bins)
            if self.a_s[r] == 1:
                p[:, bins] = c / Q
                continue
            j = int(np.argmax(a_bin[r, :]))
            u, v_ = self.pairs[j]
            for b in bins:
                guu, guv = gamma[u, u, b], gamma[u, v_, b]
                pq = pi = c / 2.0
                if guu * pq > guv * pi and guu + guv > 0:
                    pq = c * guv / (guu + guv)
                    pi = c - pq
                p[u, b] = pt_nq[j, b] = pq
                p[v_, b] = pt_ni[j, b] = pi
        if np.any(self.c_min > 0):
            rates = self._floored_user_rates(a_bin, p, pt_nq, pt_ni)
            if np.any(rates < self.c_min - 1e-9):
                floored = self._floor_start(a_bin)
                if floored is not None:
                    p, pt_nq, pt_ni = floored
        nu_n = np.zeros((P2, MN))
        for j, (u, v_) in enumerate(self.pairs):
            nu_n[j, :] = gamma[v_, v_, :] * pt_ni[j, :] / (
                gamma[v_, u, :] * pt_nq[j, :] + 1.0
            )
        nu_s = np.zeros((Q, MN))
        gs = self._gs
        for q in range(Q):
            interf = np.zeros(MN)
            for i in range(Q):
                if i != q:
                    interf += gs[q * Q + i, :] * p[i, :]
            nu_s[q, :] = gs[q * Q + q, :] * p[q, :] / (interf + 1.0)
        return ScaLinearizationPoint(
            a_n=np.asarray(a_bin, dtype=float), p=p,
            pt_nq=pt_nq, pt_ni=pt_ni, nu_n=nu_n, nu_s=nu_s,
        )

    def _set_linearization(self, pt: ScaLinearizationPoint) -> None:
        Q, MN = self.Q, self.MN
        gs = self._gs
        # SDMA tilde-V tangent, all coefficients scaled by 1/s^2 with
        # s = nu + interference + 1 at the previous iterate
        interf_prev = np.zeros((Q, MN))
        for q in range(Q):
            for i in range(Q):
                if i != q:
                    interf_prev[q, :] += gs[q * Q + i, :] * pt.p[i, :]
        u = pt.nu_s - interf_prev - 1.0
        s = pt.nu_s + interf_prev + 1.0
        inv = 1.0 / s
        inv2 = inv * inv
        self.p_invs.value = inv
        self.p_ks.value = (u * u - 2.0 * u * pt.nu_s + 2.0 * u * interf_prev) * inv2
        self.p_cnus.value = 2.0 * u * inv2
        gins = np.zeros((Q * Q, MN))
        ci = np.zeros((Q * Q, MN))
        rhss = np.zeros((Q, MN))
        for q in range(Q):
            rhss[q, :] = 4.0 * gs[q * Q + q, :] * inv2[q, :]
            for i in range(Q):
                if i != q:
                    gins[q * Q + i, :] = gs[q * Q + i, :] * inv[q, :]
                    ci[q * Q + i, :] = -2.0 * u[q, :] * gs[q * Q + i, :] * inv2[q, :]
        self.p_gins.value = gins
        self.p_ci.value = ci
        self.p_rhss.value = rhss
        if self.P2:
            # NOMA tilde-V tangent, same per-row scaling
            kn = np.zeros((self.P2, MN))
            cnun = np.zeros((self.P2, MN))
            cpqn = np.zeros((self.P2, MN))
            invn = np.zeros((self.P2, MN))
            ginn = np.zeros((self.P2, MN))
            rhsn = np.zeros((self.P2, MN))
            for j, (uu, vv) in enumerate(self.pairs):
                gvu = self.channel.gamma[vv, uu, :]
                gvv = self.channel.gamma[vv, vv, :]
                un = pt.nu_n[j, :] - gvu * pt.pt_nq[j, :] - 1.0
                sn = pt.nu_n[j, :] + gvu * pt.pt_nq[j, :] + 1.0
                ivn = 1.0 / sn
                ivn2 = ivn * ivn
                invn[j, :] = ivn
                ginn[j, :] = gvu * ivn
                kn[j, :] = (
                    un * un - 2.0 * un * pt.nu_n[j, :] + 2.0 * un * gvu * pt.pt_nq[j, :]
                ) * ivn2
                cnun[j, :] = 2.0 * un * ivn2
                cpqn[j, :] = -2.0 * un * gvu * ivn2
                rhsn[j, :] = 4.0 * gvv * ivn2
            self.p_invn.value = invn
            self.p_ginn.value = ginn
            self.p_kn.value = kn
            self.p_cnun.value = cnun
            self.p_cpqn.value = cpqn
            self.p_rhsn.value = rhsn
            self.p_aprev.value = pt.a_n
            self.p_glin.value = float(np.sum(pt.a_n**2))

    def _achieved_objective(self, a_val, p_val, qt, it_, nun, nus, a_prev) -> float:
        """Surrogate objective evaluated on the true SINR surface.

        Immune to solver inaccuracy: uses only the returned powers, with the
        SINR variables re-projected, so it never overstates what the iterate
        actually achieves.
        """
        scale = 1.0 / (self.MN * _LN2)
        obj = 0.0
        for q in range(self.Q):
            obj += self.alpha[q] * scale * float(np.log1p(nus[q, :]).sum())
        for j, (u, v_) in enumerate(self.pairs):
            guu = self.channel.gamma[u, u, :]
            obj += self.alpha[u] * scale * float(np.log1p(guu * qt[j, :]).sum())
            obj += self.alpha[v_] * scale * float(np.log1p(nun[j, :]).sum())
        if self.P2:
            obj += self.eta * float(
                2.0 * np.sum(a_prev * a_val) - np.sum(a_prev**2) - np.sum(a_val)
            )
        return obj

    def point_objective(self, pt: ScaLinearizationPoint) -> float:
        """Achieved objective of a linearization point (penalty included)."""
        return self._achieved_objective(
            pt.a_n, pt.p, pt.pt_nq, pt.pt_ni, pt.nu_n, pt.nu_s, pt.a_n
        )

    def solve(self, pt: ScaLinearizationPoint) -> ScaSolution:
        """Solve one linearized subproblem around the given point."""
        self._set_linearization(pt)
        try:
            self.problem.solve(solver=cp.CLARABEL)
        except cp.error.SolverError:
            try:
                self.problem.solve(solver=cp.SCS)
            except cp.error.SolverError:
                return ScaSolution(status="solver_error")
        status = self.problem.status
        if status not in ("optimal", "optimal_inaccurate"):
            return ScaSolution(status=status)
        a_n, p, pt_nq, pt_ni, nu_n, nu_s = self._vars
        p_val = np.maximum(p.value, 0.0)
        qt = np.maximum(pt_nq.value, 0.0) if pt_nq is not None else np.zeros((0, self.MN))
        it = np.maximum(pt_ni.value, 0.0) if pt_ni is not None else np.zeros((0, self.MN))
        # re-project the SINR variables onto the true (nonconvex) surface so
        # the next linearization point is exactly feasible
        nun = np.zeros_like(qt)
        for j, (uu, vv) in enumerate(self.pairs):
            gvu = self.channel.gamma[vv, uu, :]
            gvv = self.channel.gamma[vv, vv, :]
            nun[j, :] = gvv * it[j, :] / (gvu * qt[j, :] + 1.0)
        nus = np.zeros((self.Q, self.MN))
        gs = self._gs
        for q in range(self.Q):
            interf = np.zeros(self.MN)
            for i in range(self.Q):
                if i != q:
                    interf += gs[q * self.Q + i, :] * p_val[i, :]
            nus[q, :] = gs[q * self.Q + q, :] * p_val[q, :] / (interf + 1.0)
        a_val = np.clip(a_n.value, 0.0, 1.0) if a_n is not None else np.zeros((self.R, 0))
        return ScaSolution(
            status=status,
            objective=self._achieved_objective(a_val, p_val, qt, it, nun, nus, pt.a_n),
            a_n=a_val,
            p=p_val,
            pt_nq=qt,
            pt_ni=it,
            nu_n=nun,
            nu_s=nus,
        )

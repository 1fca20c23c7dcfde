"""Monte Carlo experiment harness.

One trial = one channel draw (seed = base_seed + trial index) evaluated by
every requested scheme.  A sweep re-runs the trial set with one config axis
varied.  Trials are independent and can run in a process pool; a scheme
failure inside a trial is recorded as an outage instead of aborting the
batch.
"""

from __future__ import annotations

import csv
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, asdict

import numpy as np

from .baselines import random_mixed_equal, random_mixed_opt, random_noma, sdma_all
from .channel import mrt_gains
from .dpmo import dp_solve
from .scasa import sa_search
from .scenario import ScenarioConfig, dbm_to_watt, partition_dd_grid, sample_scenario

__all__ = ["TrialResult", "SCHEMES", "SWEEP_AXES", "run_experiment", "emit_results"]

log = logging.getLogger(__name__)

SCHEMES = (
    "dp",
    "sca_sa",
    "sdma_all",
    "random_noma",
    "random_mixed_opt",
    "random_mixed_equal",
)

SWEEP_AXES = ("none", "power", "users", "antennas")


@dataclass(frozen=True)
class TrialResult:
    sweep_value: float | None
    trial: int
    seed: int
    scheme: str
    sum_rate_bps_hz: float
    outage: bool
    n_noma_slots: int
    n_sdma_slots: int
    wallclock_ms: float


def apply_sweep(config: ScenarioConfig, axis: str, value) -> ScenarioConfig:
    """Return the config with one sweep axis applied; power values are dBm."""
    if axis == "none" or value is None:
        return config
    if axis == "power":
        return config.with_(P=dbm_to_watt(float(value)))
    if axis == "users":
        return config.with_(Q=int(value))
    if axis == "antennas":
        return config.with_(D=int(value))
    raise ValueError(f"unknown sweep axis {axis!r}; expected one of {SWEEP_AXES}")


def _run_scheme(scheme: str, cfg: ScenarioConfig, channel, partition, seed: int):
    alpha = cfg.alpha_vec
    c_min = cfg.c_min_vec
    if scheme == "dp":
        res = dp_solve(
            channel, partition, alpha, cfg.P, cfg.delta_p, cfg.eps_brb, c_min=c_min
        )
        return res.value, False, res.plan
    if scheme == "sca_sa":
        rng = np.random.default_rng([seed, 1])
        out = sa_search(
            channel, partition, alpha, c_min, cfg.P, cfg.eta, zeta=cfg.zeta, rng=rng
        )
        if not out.feasible:
            return 0.0, True, None
        return out.value, False, out.plan
    rng = np.random.default_rng([seed, SCHEMES.index(scheme) + 1])
    fn = {
        "sdma_all": sdma_all,
        "random_noma": random_noma,
        "random_mixed_opt": random_mixed_opt,
        "random_mixed_equal": random_mixed_equal,
    }[scheme]
    res = fn(channel, partition, alpha, c_min, cfg.P, cfg.eta, rng)
    if not res.feasible:
        return 0.0, True, res.plan
    return res.value, False, res.plan


def run_trial(
    config: ScenarioConfig,
    schemes: tuple[str, ...],
    axis: str,
    sweep_value,
    trial: int,
    base_seed: int,
) -> list[TrialResult]:
    """Evaluate all schemes on one shared channel draw."""
    cfg = apply_sweep(config, axis, sweep_value)
    seed = base_seed + trial
    params = sample_scenario(cfg, seed)
    channel = mrt_gains(params)
    partition = partition_dd_grid(cfg.M, cfg.N, cfg.delta_M, cfg.delta_N)
    sv = None if sweep_value is None else float(sweep_value)
    out = []
    for scheme in schemes:
        t0 = time.perf_counter()
        try:
            value, outage, plan = _run_scheme(scheme, cfg, channel, partition, seed)
        except Exception:
            log.exception("scheme %s failed on trial %d (seed %d)", scheme, trial, seed)
            value, outage, plan = 0.0, True, None
        ms = (time.perf_counter() - t0) * 1e3
        out.append(
            TrialResult(
                sweep_value=sv,
                trial=trial,
                seed=seed,
                scheme=scheme,
                sum_rate_bps_hz=float(value),
                outage=bool(outage),
                n_noma_slots=plan.n_noma_slots if plan is not None else 0,
                n_sdma_slots=plan.n_sdma_slots if plan is not None else 0,
                wallclock_ms=ms,
            )
        )
    return out


def run_experiment(
    config: ScenarioConfig,
    schemes: tuple[str, ...] = SCHEMES,
    n_trials: int = 10,
    base_seed: int | None = None,
    sweep_axis: str = "none",
    sweep_values: tuple | None = None,
    n_jobs: int = 1,
) -> list[TrialResult]:
    """Run the full (sweep x trial x scheme) grid and collect per-trial rows."""
    for s in schemes:
        if s not in SCHEMES:
            raise ValueError(f"unknown scheme {s!r}; expected a subset of {SCHEMES}")
    if sweep_axis not in SWEEP_AXES:
        raise ValueError(f"unknown sweep axis {sweep_axis!r}")
    if "dp" in schemes and np.any(config.c_min_vec > 0):
        raise ValueError("the dp scheme requires zero rate floors")
    if base_seed is None:
        base_seed = config.rng_seed
    values = tuple(sweep_values) if sweep_values else (None,)

    jobs = [
        (config, tuple(schemes), sweep_axis, v, t, base_seed)
        for v in values
        for t in range(n_trials)
    ]
    results: list[TrialResult] = []
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            for rows in pool.map(_run_trial_star, jobs):
                results.extend(rows)
    else:
        for job in jobs:
            results.extend(run_trial(*job))
    return results


def _run_trial_star(job) -> list[TrialResult]:
    return run_trial(*job)


def emit_results(
    results: list[TrialResult],
    per_trial_path: str,
    aggregate_path: str,
) -> None:
    """Write the per-trial and aggregated CSV files."""
    fieldnames = [
        "sweep_value",
        "trial",
        "seed",
        "scheme",
        "sum_rate_bps_hz",
        "outage",
        "n_noma_slots",
        "n_sdma_slots",
        "wallclock_ms",
    ]
    with open(per_trial_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        for row in results:
            d = asdict(row)
            d["sweep_value"] = "" if row.sweep_value is None else row.sweep_value
            d["outage"] = int(row.outage)
            writer.writerow(d)

    groups: dict[tuple, list[TrialResult]] = {}
    for row in results:
        groups.setdefault((row.sweep_value, row.scheme), []).append(row)

    with open(aggregate_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "sweep_value",
                "scheme",
                "mean_rate",
                "outage_pct",
                "noma_pct",
                "sdma_pct",
                "trials",
                "mean_rate_feasible",
            ]
        )
        for (sv, scheme), rows in sorted(
            groups.items(), key=lambda kv: (kv[0][0] is not None, kv[0][0] or 0, kv[0][1])
        ):
            rates = np.array([r.sum_rate_bps_hz for r in rows])
            outages = np.array([r.outage for r in rows])
            feas = [r for r in rows if not r.outage]
            slots = np.array(
                [[r.n_noma_slots, r.n_sdma_slots] for r in feas], dtype=float
            ).reshape(-1, 2)
            tot_slots = slots.sum()
            writer.writerow(
                [
                    "" if sv is None else sv,
                    scheme,
                    f"{rates.mean():.6f}",
                    f"{100.0 * outages.mean():.2f}",
                    f"{100.0 * slots[:, 0].sum() / tot_slots:.2f}" if tot_slots else "",
                    f"{100.0 * slots[:, 1].sum() / tot_slots:.2f}" if tot_slots else "",
                    len(rows),
                    f"{np.mean([r.sum_rate_bps_hz for r in feas]):.6f}" if feas else "",
                ]
            )

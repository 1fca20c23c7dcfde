"""Resource allocation for multi-user MISO downlinks on delay-Doppler grids.

The pipeline: draw a multipath scenario, synthesize per-bin effective
channel gains under DFT precoding and maximum ratio transmission, then
maximize the weighted sum rate over slot access modes (two-user NOMA or
all-user SDMA) and per-bin powers — globally via dynamic programming with
a monotonic branch-reduce-bound inner solver, or fast via successive
convex approximation wrapped in simulated annealing.
"""

from .scenario import (
    ScenarioConfig,
    RsPartition,
    ChannelParams,
    ConfigError,
    dbm_to_watt,
    watt_to_dbm,
    path_loss_db,
    partition_dd_grid,
    sample_scenario,
    load_config,
)
from .channel import EffectiveChannel, mrt_gains, effective_diagonal_gains, build_dd_channel_matrix
from .rates import (
    AccessPlan,
    PowerAllocation,
    noma_pair_rates,
    sdma_rates,
    plan_weighted_sum,
    user_total_rate,
    check_sic_order,
)
from .feasopt import FeasibilityResult, min_power_noma, min_power_sdma, ScaSubproblemSolver
from .dpmo import brb_maximize, solve_rs_optimal, dp_solve, DpResult
from .scasa import sca_solve_p3, sca_power_allocation, sa_search, SaOutcome
from .baselines import sdma_all, random_noma, random_mixed_opt, random_mixed_equal
from .harness import run_experiment, emit_results, TrialResult, SCHEMES

__all__ = [
    "ScenarioConfig",
    "RsPartition",
    "ChannelParams",
    "ConfigError",
    "dbm_to_watt",
    "watt_to_dbm",
    "path_loss_db",
    "partition_dd_grid",
    "sample_scenario",
    "load_config",
    "EffectiveChannel",
    "mrt_gains",
    "effective_diagonal_gains",
    "build_dd_channel_matrix",
    "AccessPlan",
    "PowerAllocation",
    "noma_pair_rates",
    "sdma_rates",
    "plan_weighted_sum",
    "user_total_rate",
    "check_sic_order",
    "FeasibilityResult",
    "min_power_noma",
    "min_power_sdma",
    "ScaSubproblemSolver",
    "brb_maximize",
    "solve_rs_optimal",
    "dp_solve",
    "DpResult",
    "sca_solve_p3",
    "sca_power_allocation",
    "sa_search",
    "SaOutcome",
    "sdma_all",
    "random_noma",
    "random_mixed_opt",
    "random_mixed_equal",
    "run_experiment",
    "emit_results",
    "TrialResult",
    "SCHEMES",
]

__version__ = "0.1.0"

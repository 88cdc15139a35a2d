"""Single-cell massive-MIMO downlink simulator with energy-efficient
power allocation under RF mismatch and channel estimation error."""

__version__ = "0.1.0"

from ._backend import available_backends, backend_name, get_backend
from .channel import (
    ChannelRealization,
    UserPartition,
    draw_estimated_channel,
    draw_realization,
    draw_rf_gains,
    draw_user_positions,
    large_scale_fading,
    partition_users,
)
from .config import SystemConfig, dump_config, load_config, save_config
from .harness import (
    MonteCarloResult,
    SweepRow,
    SweepTable,
    TrialResult,
    monte_carlo,
    run_trial,
    sweep,
)
from .metrics import (
    PowerAllocation,
    RateReport,
    energy_efficiency,
    rate,
    rate_lower_bound,
    rate_report,
    sinr,
)
from .optimizer import (
    KktTerms,
    MultiplierState,
    SolveResult,
    equal_power_baseline,
    grid_oracle,
    inner_power_solve,
    kkt_power_update,
    kkt_residual,
    kkt_terms,
    lagrangian,
    min_power_floor,
    solve,
    update_multipliers,
)

__all__ = [
    "__version__",
    "available_backends", "backend_name", "get_backend",
    "ChannelRealization", "UserPartition", "draw_estimated_channel",
    "draw_realization", "draw_rf_gains", "draw_user_positions",
    "large_scale_fading", "partition_users",
    "SystemConfig", "dump_config", "load_config", "save_config",
    "MonteCarloResult", "SweepRow", "SweepTable", "TrialResult",
    "monte_carlo", "run_trial", "sweep",
    "PowerAllocation", "RateReport", "energy_efficiency", "rate",
    "rate_lower_bound", "rate_report", "sinr",
    "KktTerms", "MultiplierState", "SolveResult", "equal_power_baseline",
    "grid_oracle", "inner_power_solve", "kkt_power_update", "kkt_residual",
    "kkt_terms", "lagrangian", "min_power_floor", "solve",
    "update_multipliers",
]

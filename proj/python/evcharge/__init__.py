"""Online and offline EV charging schedules by water-filling, with charging prices."""

from ._evcharge import (
    ConfigError,
    EvchargeError,
    InfeasibleError,
    IoError,
    OfflineSolution,
    OnlineTrace,
    QuadraticCost,
    Scenario,
    SolverError,
    TimeGrid,
    WaterFillResult,
    __version__,
    compare,
    cost_gap_pct,
    load_scenario,
    offline_prices,
    online_prices,
    overload,
    run_online,
    run_online_scenario,
    solve_offline,
    solve_offline_scenario,
    toy_instance,
    variance_sweep,
    water_fill,
)

__all__ = [
    "ConfigError",
    "EvchargeError",
    "InfeasibleError",
    "IoError",
    "OfflineSolution",
    "OnlineTrace",
    "QuadraticCost",
    "Scenario",
    "SolverError",
    "TimeGrid",
    "WaterFillResult",
    "__version__",
    "compare",
    "cost_gap_pct",
    "load_scenario",
    "offline_prices",
    "online_prices",
    "overload",
    "run_online",
    "run_online_scenario",
    "solve_offline",
    "solve_offline_scenario",
    "toy_instance",
    "variance_sweep",
    "water_fill",
]

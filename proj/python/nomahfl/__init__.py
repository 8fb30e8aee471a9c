"""Python access to the NOMA hierarchical federated learning simulator."""

from ._core import (
    ConfigError,
    ExperimentConfig,
    FuzzyEngine,
    cloud_aggregate,
    edge_aggregate,
    iterations,
    local_compute_cost,
    noise_power_watts,
    noma_rates,
    run_experiment,
    select_fastest,
    shannon_rate,
    solve_schedule,
    update_staleness,
)

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "FuzzyEngine",
    "cloud_aggregate",
    "edge_aggregate",
    "iterations",
    "local_compute_cost",
    "noise_power_watts",
    "noma_rates",
    "run_experiment",
    "select_fastest",
    "shannon_rate",
    "solve_schedule",
    "update_staleness",
]

"""Slotted ALOHA with time offsets: closed forms, optimizers and simulation."""

from ._toaloha import (
    ConfigError,
    InvariantError,
    SlotConfig,
    avg_delay_saturated,
    csv_header,
    derive_slot_params,
    optimal_config_for_alpha,
    optimal_kappa,
    optimal_p,
    run_spec,
    stability_threshold,
    throughput_poisson,
    throughput_saturated,
    throughput_upper_bound,
    validate,
)

__all__ = [
    "ConfigError",
    "InvariantError",
    "SlotConfig",
    "avg_delay_saturated",
    "csv_header",
    "derive_slot_params",
    "optimal_config_for_alpha",
    "optimal_kappa",
    "optimal_p",
    "run_spec",
    "stability_threshold",
    "throughput_poisson",
    "throughput_saturated",
    "throughput_upper_bound",
    "validate",
]

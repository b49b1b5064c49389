"""Spacecraft proximity-operations simulator with CBF runtime assurance."""

from ._core import (
    ChiefOrbit,
    ConfigError,
    NumericalError,
    ParseError,
    RelativeState,
    RtaParams,
    VehicleParams,
    baseline_act,
    baseline_stats,
    cli,
    cwh_accel,
    cwh_closed_form,
    observe,
    propagate_cwh,
    reward,
    rta_filter,
    run_scenario,
    solve_qp,
)

__all__ = [
    "ChiefOrbit",
    "ConfigError",
    "NumericalError",
    "ParseError",
    "RelativeState",
    "RtaParams",
    "VehicleParams",
    "baseline_act",
    "baseline_stats",
    "cli",
    "cwh_accel",
    "cwh_closed_form",
    "observe",
    "propagate_cwh",
    "reward",
    "rta_filter",
    "run_scenario",
    "solve_qp",
]

"""Radial focusing wave equation: blow-up solver, weighted energies, estimate checks."""

from ._core import (
    InitialDataSpec,
    IoError,
    RunResult,
    SolverError,
    SolverConfig,
    annulus_scaling_constant,
    evolve,
    mz_quantity_ode,
    ode_value,
    richardson_blowup_time,
    run_command,
    slab_scaling_constant,
    verify_carleman,
    weight,
)

__all__ = [
    "InitialDataSpec",
    "IoError",
    "RunResult",
    "SolverError",
    "SolverConfig",
    "annulus_scaling_constant",
    "evolve",
    "mz_quantity_ode",
    "ode_value",
    "richardson_blowup_time",
    "run_command",
    "slab_scaling_constant",
    "verify_carleman",
    "weight",
]

"""Python access to the pendusim core."""

from ._core import (
    Error,
    GimbalLock,
    InvalidConfig,
    NoConvergence,
    SystemModel,
    UnsupportedPreset,
    com_xy,
    coriolis_matrix,
    forward_dynamics,
    gravity_vector,
    kinetic_energy,
    mass_matrix,
    model_from_dict,
    model_preset,
    potential_energy,
    preset_names,
    run,
    solve_equilibrium,
    verify,
)

__all__ = [name for name in dir() if not name.startswith("_")]

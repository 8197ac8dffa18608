"""dsrlab: deformed-relativity kinematics, boost flows and spectral wave evolution."""

from dsrlab.kinematics import (
    Branch,
    EffectiveMasses,
    Model,
    PhysParams,
    casimir_residual,
    cpt_ratio,
    dirac_massshell_identity,
    effective_masses,
    group_velocity,
    k_lower_bound,
    m_minus,
    m_plus,
    particle_velocity,
    solve_dispersion,
    solve_dispersion_batch,
)

__version__ = "0.1.0"

__all__ = [
    "Branch",
    "EffectiveMasses",
    "Model",
    "PhysParams",
    "casimir_residual",
    "cpt_ratio",
    "dirac_massshell_identity",
    "effective_masses",
    "group_velocity",
    "k_lower_bound",
    "m_minus",
    "m_plus",
    "particle_velocity",
    "solve_dispersion",
    "solve_dispersion_batch",
]

"""Deterministic solver for a constrained phase-field model of helium
supercooling with a mixed Fourier / power-law heat flux.

The state is a temperature field theta and a volume fraction beta of
normal-fluid helium constrained to [0, 1].  Each time step solves the
phase variational inequality by projected Gauss-Seidel, then the
degenerate nonlinear temperature equation by Picard-lagged conjugate
gradients; both subproblems and all diagnostics are bit-reproducible.
"""

from .constitutive import (
    ModelParams,
    Variant,
    entropy,
    free_energy,
    heat_flux,
    internal_energy_density,
    phase_driving_force,
    power_law_coeff,
    pseudo_potential,
)
from .errors import (
    CryophaseError,
    DomainError,
    LinearSolveFailure,
    NonConvergence,
    OrderRegression,
    PositivityLossWarning,
    ValidationError,
)
from .grid import (
    Field,
    Grid,
    VectorField,
    divergence_neumann,
    gradient,
    integral,
    laplacian_neumann,
    norm_H1,
    norm_L2,
    norm_Lp_grad,
)
from .heat import HeatStepResult, apriori_monitor, heat_step, heat_step_full_energy
from .kernels import BACKEND
from .mms import ManufacturedSolution, mms_verify, solution_preset
from .phase import PhaseStepResult, phase_step_projected, phase_step_yosida
from .scenarios import scenario_config
from .simulator import (
    CouplingSpec,
    EnergyLedger,
    RunResult,
    SimConfig,
    SolverOptions,
    convergence_study,
    run,
    sweep_epsilon,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "CouplingSpec",
    "CryophaseError",
    "DomainError",
    "EnergyLedger",
    "Field",
    "Grid",
    "HeatStepResult",
    "LinearSolveFailure",
    "ManufacturedSolution",
    "ModelParams",
    "NonConvergence",
    "OrderRegression",
    "PhaseStepResult",
    "PositivityLossWarning",
    "RunResult",
    "SimConfig",
    "SolverOptions",
    "ValidationError",
    "VectorField",
    "Variant",
    "apriori_monitor",
    "convergence_study",
    "divergence_neumann",
    "entropy",
    "free_energy",
    "gradient",
    "heat_flux",
    "heat_step",
    "heat_step_full_energy",
    "integral",
    "internal_energy_density",
    "laplacian_neumann",
    "mms_verify",
    "norm_H1",
    "norm_L2",
    "norm_Lp_grad",
    "phase_driving_force",
    "phase_step_projected",
    "phase_step_yosida",
    "power_law_coeff",
    "pseudo_potential",
    "run",
    "scenario_config",
    "solution_preset",
    "sweep_epsilon",
    "__version__",
]

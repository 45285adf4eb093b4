"""Two-group SIRD simulator with quarantine, biased testing and preferred mixing."""
from ._kernels import BACKEND
from .integrator import (
    IntegrationConfig,
    RunSummary,
    Trajectory,
    initial_state,
    rk4_step,
    simulate,
    summarize,
)
from .model import (
    MixingMatrix,
    ModelParams,
    StateVector,
    derivatives,
    mixing_fractions,
    mixing_matrix,
    mortality_given_detection,
    validate_params,
)
from .oracles import homogeneous_final_size, single_group_final_size, two_group_final_size

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "IntegrationConfig",
    "MixingMatrix",
    "ModelParams",
    "RunSummary",
    "StateVector",
    "Trajectory",
    "derivatives",
    "homogeneous_final_size",
    "initial_state",
    "mixing_fractions",
    "mixing_matrix",
    "mortality_given_detection",
    "rk4_step",
    "simulate",
    "single_group_final_size",
    "summarize",
    "two_group_final_size",
    "validate_params",
]

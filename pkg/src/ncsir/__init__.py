"""Reaction-diffusion SIR model with spreading noncompliance and adjoint-based optimal control."""
from ._version import __version__
from .adjoint import CostWeights, simulate_adjoint
from .config import ExperimentConfig, load_config, preset
from .engine import Grid, TimeGrid, Trajectory, simulate_forward
from .errors import (ConfigError, NcsirError, SolverError, ValidationError)
from .kernels import BACKEND
from .model import ModelParams, reaction_rhs
from .objective import CostBreakdown, evaluate_cost, relative_cost_reduction
from .optimizer import OptimConfig, OptimResult, project, run
from .problem import Problem, baseline_problem, small_test_problem

__all__ = [
    "__version__", "BACKEND", "CostWeights", "simulate_adjoint", "ExperimentConfig",
    "load_config", "preset", "Grid", "TimeGrid", "Trajectory", "simulate_forward",
    "ConfigError", "NcsirError", "SolverError", "ValidationError", "ModelParams",
    "reaction_rhs", "CostBreakdown", "evaluate_cost", "relative_cost_reduction",
    "OptimConfig", "OptimResult", "project", "run", "Problem", "baseline_problem",
    "small_test_problem",
]

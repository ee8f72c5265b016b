"""Bounded-rational multi-task decisions via rate-distortion / Blahut-Arimoto."""

__version__ = "0.1.0"

from .core import (ActionSpace, Distribution, ObservationSpace, TaskSpec, check_beta,
                   entropy, expected_utility, kl_divergence, marginal,
                   mutual_information, objective)
from .free_energy import (FreeEnergyReport, boltzmann_posterior, free_energy_difference,
                          free_energy_report, log_partition)
from .solver import SolveResult, SolverOptions, fixed_point_residual, solve
from .sweep import (SweepRecord, SweepSchedule, detect_transition, rate_utility_curve,
                    support_changes, sweep)
from .tasks import grid_task, grid_utility, load_task, save_task, two_task_problem, validate_task
from .sampler import rejection_sample, sample, top_k

__all__ = [
    "ActionSpace", "Distribution", "ObservationSpace", "TaskSpec", "check_beta",
    "entropy", "expected_utility", "kl_divergence", "marginal", "mutual_information",
    "objective", "FreeEnergyReport", "boltzmann_posterior", "free_energy_difference",
    "free_energy_report", "log_partition", "SolveResult", "SolverOptions",
    "fixed_point_residual", "solve", "SweepRecord", "SweepSchedule", "detect_transition",
    "rate_utility_curve", "support_changes", "sweep", "grid_task", "grid_utility",
    "load_task", "save_task", "two_task_problem", "validate_task", "rejection_sample",
    "sample", "top_k",
]

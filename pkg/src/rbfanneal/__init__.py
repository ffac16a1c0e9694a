"""Radial basis function regression with annealed model-size search.

The number of basis functions and their centre locations are treated as
random, with the linear weights and noise variances integrated out in closed
form.  A reversible-jump kernel explores model sizes; simulated annealing on
top of it drives the chain toward the joint posterior mode.  See ``cli`` for
the command-line surface and ``annealing.run_annealing`` for the library
entry point.
"""

from ._backend import backend_name
from .annealing import (AnnealSettings, CoolingSchedule, FitResult,
                        TraceRecord, annealed_accept, best_result,
                        run_annealing, run_multi_start, write_trace_csv,
                        write_trace_jsonl)
from .criteria import Criterion, penalized_score
from .data import (DataFormatError, generate_robot_arm, load_csv,
                   mean_squared_error, robot_arm_surface, save_csv,
                   split_dataset)
from .model import (EUCLIDEAN, Basis, Dataset, DegenerateDesignError, Metric,
                    build_design_matrix, fit_least_squares,
                    log_marginal_posterior, noise_variance_estimates,
                    posterior_parts, predict, residual_quadratics)
from .moves import (BirthRegion, MoveOutcome, MoveProbabilities,
                    SamplerContext, SamplerState, birth_log_ratio,
                    death_log_ratio, evaluate_state, initial_state,
                    make_context, merge_log_ratio, propose_birth,
                    propose_death, propose_merge, propose_split,
                    propose_update, rjmcmc_step, split_log_ratio)

__version__ = "0.1.0"

__all__ = [
    "AnnealSettings", "Basis", "BirthRegion", "CoolingSchedule", "Criterion",
    "DataFormatError", "Dataset", "DegenerateDesignError", "EUCLIDEAN",
    "FitResult", "Metric", "MoveOutcome", "MoveProbabilities",
    "SamplerContext", "SamplerState", "TraceRecord", "annealed_accept",
    "backend_name", "best_result", "birth_log_ratio", "build_design_matrix",
    "death_log_ratio", "evaluate_state", "fit_least_squares",
    "generate_robot_arm", "initial_state", "load_csv",
    "log_marginal_posterior", "make_context", "mean_squared_error",
    "merge_log_ratio", "noise_variance_estimates", "penalized_score",
    "posterior_parts", "predict", "propose_birth", "propose_death",
    "propose_merge", "propose_split", "propose_update",
    "residual_quadratics", "rjmcmc_step", "robot_arm_surface",
    "run_annealing", "run_multi_start", "save_csv", "split_dataset",
    "split_log_ratio", "write_trace_csv", "write_trace_jsonl",
]

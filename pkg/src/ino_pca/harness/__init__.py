"""Monte Carlo experiment harness."""

from .config import ExperimentConfig, desk_config, load_config, paper_config, steps_for
from .engine import Aggregate, TrialTrace, aggregate, first_crossing, run_monte_carlo, run_trial, theory_columns

__all__ = [
    "ExperimentConfig", "desk_config", "load_config", "paper_config", "steps_for",
    "Aggregate", "TrialTrace", "aggregate", "first_crossing", "run_monte_carlo", "run_trial", "theory_columns",
]

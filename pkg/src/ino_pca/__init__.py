"""Implicitly normalized online PCA (INO-PCA).

Streaming estimators for the leading eigenvector of a spiked covariance
model, the mean-field ODE and PDE that describe them in high dimension, and
a Monte Carlo harness that compares the two.
"""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source tree without installation
    __version__ = "0.1.0"

from .algorithms import (AlgorithmSpec, MultiPcState, adaoja_step, adaptive_ino_step, ccipca_step, ino_pca_step,
                         krasulina_step, multi_pc_step, oja_step, parse_algorithm_spec, regularized_step)
from .errors import (ConfigError, DegeneracyError, DomainError, InoPcaError, IntegrationBlowupError,
                     LambdaBandError, NumericalError, ParseError, SolverInstabilityError, TrialFailure)
from .metrics import cosine_similarity, grassmann_distance, l1_density_distance, norm_parameter
from .spiked_model import (EstimateState, InitSpec, XiDist, init_estimate, make_signal, parse_init_spec,
                           parse_xi_spec, sample_observation, trial_rng)
from .theory_ode import OdeParams, critical_snr, integrate, integrate_oja, optimal_lambda0, optimal_nu, steady_state

__all__ = [
    "__version__",
    "AlgorithmSpec", "MultiPcState", "adaoja_step", "adaptive_ino_step", "ccipca_step", "ino_pca_step",
    "krasulina_step", "multi_pc_step", "oja_step", "parse_algorithm_spec", "regularized_step",
    "ConfigError", "DegeneracyError", "DomainError", "InoPcaError", "IntegrationBlowupError", "LambdaBandError",
    "NumericalError", "ParseError", "SolverInstabilityError", "TrialFailure",
    "cosine_similarity", "grassmann_distance", "l1_density_distance", "norm_parameter",
    "EstimateState", "InitSpec", "XiDist", "init_estimate", "make_signal", "parse_init_spec", "parse_xi_spec",
    "sample_observation", "trial_rng",
    "OdeParams", "critical_snr", "integrate", "integrate_oja", "optimal_lambda0", "optimal_nu", "steady_state",
]

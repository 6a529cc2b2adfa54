"""Simulation and analysis of single-node time-delay reservoir computers."""

from .bench import run_narma10, run_tradeoff_study, sweep
from .config import ExperimentConfig
from .dde import DelayDynamics, InitialCondition, Trajectory, integrate
from .errors import (ConfigurationError, ContractError, DelayResError, DivergenceError,
                     DomainError, NumericalError)
from .readout import StateMatrix, narma10, nrmse, predict, ridge_fit
from .separation import (delta_k, fourier_coeffs, pairwise_separation,
                         separation_lower_bound)
from .signal import ClockConfig, Mask, apply_mask, generate_mask, sample_and_hold
from .spectral import lambert_w, spectral_abscissa, spectral_abscissa_scalar
from .stability import LKFConfig, iss_epsilon_critical, verify_delta_iss, verify_dissipation

__version__ = "0.1.0"

"""Null-space-projection spectrum sharing between a colocated MIMO radar and
a MIMO communication system, with Rayleigh wave-height perturbations of the
interference channel."""

__version__ = "0.1.0"

from .channel import (
    PerturbationModel,
    empirical_second_moment,
    perturbed_channel,
    rms_wave_height,
    sample_interference_channel,
    sample_perturbation,
    sample_wave_height,
)
from .estimator import (
    EstimationError,
    MLGrid,
    ReceiveSnapshot,
    estimate_aoa,
    matched_filter,
    ml_objective,
    simulate_received,
)
from .geometry import ArrayGeometry, receive_steering, steering_matrix, transmit_steering
from .kernels import BACKEND
from .montecarlo import ExperimentConfig, TrialResult, run_experiment, run_trial
from .nsp import (
    NoNullSpaceError,
    NullSpaceBasis,
    leakage,
    null_space_basis,
    project_waveform,
    projector,
)
from .waveform import correlation_matrix, generate_orthogonal_bpsk

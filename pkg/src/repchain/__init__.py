"""Fidelity and secret-key rate of repeater chains, in closed form and by simulation."""

from .analytic import (
    UnstableQueueError,
    average_fidelity,
    binary_entropy,
    secret_key_rate,
    skr_threshold_fidelity,
    tau_lst,
)
from .channels import BellDiagonalState, Channel, compose, final_fidelity, noisy_bsm
from .config import ConfigError, ExperimentConfig, load_config
from .experiments import (
    SweepResult,
    run_distance_optimization,
    run_hardware_heatmap,
    run_lambda_sweep,
)
from .model import (
    ChainSpec,
    DegenerateServiceError,
    LinkSpec,
    NodeSpec,
    Noise,
    Policy,
    ServiceMode,
    SourcePlacement,
    homogeneous_chain,
)
from .oracle import oracle_dense_bsm
from .simulator import (
    FidelityReport,
    InsufficientSamplesError,
    ServiceModel,
    SimConfig,
    simulate_one_shot,
    simulate_stream,
)

__version__ = "0.1.0"

"""Joint local-update, total-update and batch-size scheduling for mobile edge learning."""
from .bounds import ConvergenceParams, feasible_tau_upper, h_tau, nu_tau, p_tau
from .config import ExperimentConfig, load_config
from .costs import (
    CostCoefficients,
    LearnerProfile,
    ModelSpec,
    OffloadMode,
    cost_coefficients,
    time_compute,
    time_receive,
    time_send,
    total_time,
)
from .errors import ConfigError, InfeasibleError
from .experiment import ExperimentReport, emit_report, load_report, run_sweep
from .orchestrator import TrainingConfig, auto_tau_max, run_training
from .scheduler import (
    FleetCosts,
    Schedule,
    batch_allocation,
    convexity_certificate,
    find_tau_star,
    hu_schedule,
    l_given_dk_tau,
    l_of_tau,
    objective,
)
from .wireless import ChannelSpec, link_rate, pathloss_gain

__version__ = "0.1.0"

__all__ = [
    "ConvergenceParams",
    "feasible_tau_upper",
    "h_tau",
    "nu_tau",
    "p_tau",
    "ExperimentConfig",
    "load_config",
    "CostCoefficients",
    "LearnerProfile",
    "ModelSpec",
    "OffloadMode",
    "cost_coefficients",
    "time_compute",
    "time_receive",
    "time_send",
    "total_time",
    "ConfigError",
    "InfeasibleError",
    "ExperimentReport",
    "emit_report",
    "load_report",
    "run_sweep",
    "TrainingConfig",
    "auto_tau_max",
    "run_training",
    "FleetCosts",
    "Schedule",
    "batch_allocation",
    "convexity_certificate",
    "find_tau_star",
    "hu_schedule",
    "l_given_dk_tau",
    "l_of_tau",
    "objective",
    "ChannelSpec",
    "link_rate",
    "pathloss_gain",
]

"""Brownian-bridge data-to-data generative modeling at desk scale."""

__version__ = "0.1.0"

from .bridge import (
    T_CLAMP,
    BridgeSample,
    EndpointPair,
    conditional_variance,
    displacement_target,
    interpolate,
    marginal_variance,
    sample_state,
    velocity_target,
)
from .numerics import RngStream, Tensor, gaussian, squared_norm, uniform
from .objectives import (
    NormalizationFactor,
    ObjectiveKind,
    alpha_factor,
    loss,
    loss_gradient,
    stabilized_target,
    target_profile,
)
from .sampler import EndpointStats, SamplerStep, endpoint_statistics, oracle_field, sample, step
from .schedules import Schedule, shifted, uniform as uniform_schedule
from .tasks import EvalReport, TaskSpec, energy_distance, evaluate, generate_pairs
from .trainer import TrainConfig, TrainStats, train, train_step

__all__ = [
    "T_CLAMP",
    "BridgeSample",
    "EndpointPair",
    "EndpointStats",
    "EvalReport",
    "NormalizationFactor",
    "ObjectiveKind",
    "RngStream",
    "SamplerStep",
    "Schedule",
    "TaskSpec",
    "Tensor",
    "TrainConfig",
    "TrainStats",
    "alpha_factor",
    "conditional_variance",
    "displacement_target",
    "endpoint_statistics",
    "energy_distance",
    "evaluate",
    "gaussian",
    "generate_pairs",
    "interpolate",
    "loss",
    "loss_gradient",
    "marginal_variance",
    "oracle_field",
    "sample",
    "sample_state",
    "shifted",
    "squared_norm",
    "stabilized_target",
    "step",
    "target_profile",
    "train",
    "train_step",
    "uniform",
    "uniform_schedule",
    "velocity_target",
]

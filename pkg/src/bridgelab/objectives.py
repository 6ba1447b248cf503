"""Training targets and losses: displacement, raw velocity, stabilized velocity.

The raw velocity target has conditional second moment

    E ||u_t||^2 = ||x1 - x0||^2 + s^2 t D / (1 - t),

which diverges as t -> 1, while the displacement target's magnitude decays
like (1-t). The stabilized objective divides the velocity residual by the
per-sample factor

    alpha^2 = 1 + s^2 t D / ((1 - t) ||x1 - x0||^2),

chosen exactly so that the rescaled target u_t / alpha has constant expected
squared magnitude ||x1 - x0||^2 at every t. The network always predicts raw
velocity; only the loss residual is rescaled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .bridge import (
    T_CLAMP,
    BridgeSample,
    EndpointPair,
    displacement_target,
    velocity_target,
)
from .errors import DomainError
from .numerics import RngStream, Tensor, gaussian, squared_norm

# Guard for coincident endpoints (legal in translation data: unchanged
# regions give x0 == x1). Keeps alpha finite instead of rejecting the pair.
SQNORM_FLOOR_PER_DIM = 1e-8


class ObjectiveKind(str, Enum):
    DISPLACEMENT = "displacement"
    VELOCITY = "velocity"
    STABILIZED_VELOCITY = "stabilized_velocity"


DEFAULT_OBJECTIVE = ObjectiveKind.STABILIZED_VELOCITY


@dataclass(frozen=True)
class NormalizationFactor:
    alpha_squared: float

    @property
    def alpha(self) -> float:
        return math.sqrt(self.alpha_squared)


def _floored_distance_sq(pair: EndpointPair) -> float:
    return max(squared_norm(pair.x1 - pair.x0), SQNORM_FLOOR_PER_DIM * pair.dimension)


def alpha_factor(pair: EndpointPair, t: float, noise_scale: float) -> NormalizationFactor:
    """Per-sample normalization factor of the stabilized objective.

    alpha^2 = 1 + s^2 t D / ((1-t) max(||x1-x0||^2, floor)) >= 1, with
    equality iff t=0 or s=0. Computed per sample, never batch-pooled.
    """
    if not 0.0 <= t <= 1.0 - T_CLAMP:
        raise DomainError(f"alpha factor requires 0 <= t <= {1.0 - T_CLAMP!r}, got {t}")
    s = float(noise_scale)
    alpha_sq = 1.0 + (s * s * t * pair.dimension) / ((1.0 - t) * _floored_distance_sq(pair))
    return NormalizationFactor(alpha_squared=alpha_sq)


def stabilized_target(pair: EndpointPair, sample: BridgeSample, noise_scale: float) -> Tensor:
    """Velocity target rescaled by 1/alpha; equals x1 - x0 in expectation scale."""
    return velocity_target(pair, sample) / alpha_factor(pair, sample.t, noise_scale).alpha


def raw_target(kind: ObjectiveKind, pair: EndpointPair, sample: BridgeSample) -> Tensor:
    """The unnormalized regression target the network of the given kind predicts.

    For the stabilized objective this is the raw velocity target: the
    rescaling applies to the residual in the loss, not to the prediction.
    """
    if kind is ObjectiveKind.DISPLACEMENT:
        return displacement_target(pair, sample)
    return velocity_target(pair, sample)


def _residual_scale_sq(
    kind: ObjectiveKind, pair: EndpointPair, sample: BridgeSample, noise_scale: float
) -> float:
    if kind is ObjectiveKind.STABILIZED_VELOCITY:
        return alpha_factor(pair, sample.t, noise_scale).alpha_squared
    return 1.0


def loss(
    kind: ObjectiveKind,
    prediction: Tensor,
    pair: EndpointPair,
    sample: BridgeSample,
    noise_scale: float,
) -> float:
    """Per-sample squared-error loss of the chosen objective.

    displacement:        ||pred - (x1 - x_t)||^2
    velocity:            ||pred - u_t||^2
    stabilized velocity: ||(pred - u_t) / alpha||^2
    """
    prediction = np.asarray(prediction, dtype=np.float64)
    if prediction.shape != pair.x0.shape:
        raise ValueError(f"prediction shape {prediction.shape} does not match {pair.x0.shape}")
    target = raw_target(kind, pair, sample)
    return squared_norm(prediction - target) / _residual_scale_sq(kind, pair, sample, noise_scale)


def loss_gradient(
    kind: ObjectiveKind,
    prediction: Tensor,
    pair: EndpointPair,
    sample: BridgeSample,
    noise_scale: float,
) -> Tensor:
    """Gradient of :func:`loss` with respect to the prediction: 2 (pred - target) / alpha^2."""
    prediction = np.asarray(prediction, dtype=np.float64)
    if prediction.shape != pair.x0.shape:
        raise ValueError(f"prediction shape {prediction.shape} does not match {pair.x0.shape}")
    target = raw_target(kind, pair, sample)
    return 2.0 * (prediction - target) / _residual_scale_sq(kind, pair, sample, noise_scale)


# ---------------------------------------------------------------------------
# Loss-contribution profiles S(t) and C(t)
# ---------------------------------------------------------------------------

# C(t) is always normalized by the integral of S up to this time.
PROFILE_T_MAX = 0.999


@dataclass(frozen=True)
class ProfilePoint:
    t: float
    s_value: float  # instantaneous contribution S(t) = E ||target||^2
    c_value: float  # cumulative share C(t) = int_0^t S / int_0^0.999 S


def expected_target_sqnorm(
    kind: ObjectiveKind, pair: EndpointPair, noise_scale: float, t: float
) -> float:
    """Closed-form S(t) = E ||target_t||^2 over the noise draw, endpoints fixed.

    velocity:     ||x1-x0||^2 + s^2 t D / (1-t)
    displacement: (1-t)^2 ||x1-x0||^2 + s^2 t (1-t) D
    stabilized:   velocity form divided by alpha^2 (constant ||x1-x0||^2
                  whenever the endpoint distance is above the degeneracy floor)
    """
    if not 0.0 <= t <= 1.0 - T_CLAMP:
        raise DomainError(f"profile time must be in [0, {1.0 - T_CLAMP!r}], got {t}")
    s = float(noise_scale)
    dist_sq = squared_norm(pair.x1 - pair.x0)
    d = pair.dimension
    if kind is ObjectiveKind.VELOCITY:
        return dist_sq + s * s * t * d / (1.0 - t)
    if kind is ObjectiveKind.DISPLACEMENT:
        return (1.0 - t) ** 2 * dist_sq + s * s * t * (1.0 - t) * d
    velocity_sqnorm = dist_sq + s * s * t * d / (1.0 - t)
    return velocity_sqnorm / alpha_factor(pair, t, s).alpha_squared


def _mc_target_sqnorm(
    kind: ObjectiveKind,
    pair: EndpointPair,
    noise_scale: float,
    t: float,
    draws: int,
    rng: RngStream,
) -> float:
    eps = gaussian(rng, (draws,) + pair.x0.shape)
    alpha_sq = 1.0
    if kind is ObjectiveKind.STABILIZED_VELOCITY:
        alpha_sq = alpha_factor(pair, t, noise_scale).alpha_squared
    # Vectorized over draws: target is affine in eps for every kind.
    interp = (1.0 - t) * pair.x0 + t * pair.x1
    spread = float(noise_scale) * math.sqrt(t * (1.0 - t))
    states = interp + spread * eps
    if kind is ObjectiveKind.DISPLACEMENT:
        targets = pair.x1 - states
    else:
        targets = (pair.x1 - states) / (1.0 - t)
    sqnorms = np.sum((targets * targets).reshape(draws, -1), axis=1)
    return float(np.mean(sqnorms)) / alpha_sq


def target_profile(
    kind: ObjectiveKind,
    pair: EndpointPair,
    noise_scale: float,
    t_grid: "np.ndarray | list[float]",
    mc_samples: int = 0,
    rng: RngStream | None = None,
) -> list[ProfilePoint]:
    """Evaluate S(t) on a grid and accumulate C(t) by trapezoidal integration.

    With ``mc_samples == 0`` the closed forms above are used; otherwise S is
    estimated by Monte-Carlo over the noise draw with ``mc_samples`` draws
    per grid point on independent substreams (the closed form remains the
    cross-check oracle either way). C is normalized by the trapezoidal
    integral over the full grid, so the grid should extend to 0.999 for the
    canonical normalization.
    """
    grid = np.asarray(t_grid, dtype=np.float64)
    if grid.size == 0:
        raise ValueError("profile grid must be nonempty")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("profile grid must be strictly increasing")
    if grid[0] < 0.0 or grid[-1] > PROFILE_T_MAX:
        raise DomainError(f"profile grid must lie within [0, {PROFILE_T_MAX}]")
    if mc_samples > 0 and rng is None:
        raise ValueError("Monte-Carlo profile estimation needs an RngStream")

    if mc_samples > 0:
        s_values = np.array(
            [
                _mc_target_sqnorm(kind, pair, noise_scale, float(t), mc_samples, rng.split(i))
                for i, t in enumerate(grid)
            ]
        )
    else:
        s_values = np.array(
            [expected_target_sqnorm(kind, pair, noise_scale, float(t)) for t in grid]
        )

    cumulative = np.concatenate(
        ([0.0], np.cumsum(np.diff(grid) * (s_values[1:] + s_values[:-1]) / 2.0))
    )
    total = cumulative[-1]
    if total <= 0.0:
        raise ValueError("profile normalization integral is not positive")
    return [
        ProfilePoint(t=float(t), s_value=float(s), c_value=float(c / total))
        for t, s, c in zip(grid, s_values, cumulative)
    ]


def default_profile_grid(points: int = 1000) -> np.ndarray:
    """Uniform grid on [0, 0.999], dense enough for the divergent velocity profile."""
    return np.linspace(0.0, PROFILE_T_MAX, points)

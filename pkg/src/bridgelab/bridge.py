"""Closed-form mathematics of the noise-scaled Brownian bridge.

A bridge pinned at ``x0`` (t=0) and ``x1`` (t=1) with global noise scale
``s`` has Gaussian conditional marginals

    X_t ~ N((1-t) x0 + t x1,  s^2 t (1-t) I),

so an intermediate state is constructed from a standard normal draw eps as

    x_t = (1-t) x0 + t x1 + s sqrt(t (1-t)) eps.

The conditional drift toward the target, used as the velocity regression
target, is (x1 - x_t) / (1-t); substituting x_t gives the equivalent form
(x1 - x0) - s sqrt(t / (1-t)) eps, which diverges as t -> 1. Training time
is therefore clamped to [0, 1 - T_CLAMP].
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ClampedTimeError, DomainError
from .numerics import RngStream, Tensor, gaussian

# Training-time guard band next to t=1: velocity targets reject t beyond
# 1 - T_CLAMP and uniform time draws stay inside [0, 1 - T_CLAMP).
T_CLAMP = 1e-5


def _check_noise_scale(noise_scale: float) -> float:
    s = float(noise_scale)
    if not (s >= 0.0):
        raise DomainError(f"noise scale must be >= 0, got {noise_scale}")
    return s


@dataclass(frozen=True)
class EndpointPair:
    """Source latent x0 and target latent x1 of identical shape.

    ``context`` optionally carries per-pair conditioning (e.g. a task
    parameter the pairing depends on); it is opaque to the bridge math.
    """

    x0: Tensor
    x1: Tensor
    context: Tensor | None = None

    def __post_init__(self):
        x0 = np.asarray(self.x0, dtype=np.float64)
        x1 = np.asarray(self.x1, dtype=np.float64)
        if x0.shape != x1.shape:
            raise ValueError(f"endpoint shapes differ: {x0.shape} vs {x1.shape}")
        object.__setattr__(self, "x0", x0)
        object.__setattr__(self, "x1", x1)
        if self.context is not None:
            object.__setattr__(self, "context", np.asarray(self.context, dtype=np.float64))

    @property
    def dimension(self) -> int:
        return self.x0.size


@dataclass(frozen=True)
class BridgeSample:
    """Training-time tuple: time t, the noise draw, and the constructed state."""

    t: float
    epsilon: Tensor
    state: Tensor


def interpolate(pair: EndpointPair, t: float) -> Tensor:
    """Deterministic linear interpolation (1-t) x0 + t x1 for t in [0, 1]."""
    if not 0.0 <= t <= 1.0:
        raise DomainError(f"interpolation time must be in [0, 1], got {t}")
    return (1.0 - t) * pair.x0 + t * pair.x1


def sample_state(pair: EndpointPair, t: float, eps: Tensor, noise_scale: float) -> BridgeSample:
    """Construct the intermediate bridge state at time t from a noise draw.

    t=1 is excluded: the state is defined there (it is x1) but never sampled
    for training since the velocity target is singular at t=1.
    """
    s = _check_noise_scale(noise_scale)
    if not 0.0 <= t < 1.0:
        raise DomainError(f"state construction requires 0 <= t < 1, got {t}")
    eps = np.asarray(eps, dtype=np.float64)
    if eps.shape != pair.x0.shape:
        raise ValueError(f"noise shape {eps.shape} does not match endpoints {pair.x0.shape}")
    state = interpolate(pair, t) + s * math.sqrt(t * (1.0 - t)) * eps
    return BridgeSample(t=float(t), epsilon=eps, state=state)


def velocity_target(pair: EndpointPair, sample: BridgeSample) -> Tensor:
    """Conditional drift toward the target: (x1 - state) / (1 - t).

    Rejects t beyond the clamp band, where the target is numerically
    unbounded.
    """
    if sample.t > 1.0 - T_CLAMP:
        raise ClampedTimeError(
            f"velocity target undefined for t > {1.0 - T_CLAMP!r}, got t={sample.t}"
        )
    return (pair.x1 - sample.state) / (1.0 - sample.t)


def displacement_target(pair: EndpointPair, sample: BridgeSample) -> Tensor:
    """Remaining displacement to the target: x1 - state."""
    return pair.x1 - sample.state


def marginal_variance(t: float, noise_scale: float) -> float:
    """Per-coordinate variance of the bridge state: s^2 t (1-t).

    Zero at both endpoints (the process is pinned) and maximal at t=0.5.
    """
    s = _check_noise_scale(noise_scale)
    if not 0.0 <= t <= 1.0:
        raise DomainError(f"marginal variance requires t in [0, 1], got {t}")
    return s * s * t * (1.0 - t)


def conditional_variance(t1: float, t2: float, noise_scale: float) -> float:
    """Per-coordinate variance of the state at t2 given the state at t1.

    From the bridge covariance Cov(B_t1, B_t2) = t1 (1-t2):

        Var(X_t2 | X_t1) = s^2 (t2 - t1)(1 - t2) / (1 - t1).

    Reduces to the marginal variance at t1 = 0.
    """
    s = _check_noise_scale(noise_scale)
    if not (0.0 <= t1 <= t2 <= 1.0):
        raise DomainError(f"conditional variance requires 0 <= t1 <= t2 <= 1, got ({t1}, {t2})")
    if t1 >= 1.0:
        raise DomainError("conditioning time t1 must be < 1")
    return s * s * (t2 - t1) * (1.0 - t2) / (1.0 - t1)


def sample_joint(
    pair: EndpointPair,
    t1: float,
    t2: float,
    noise_scale: float,
    rng: RngStream,
    draws: int,
) -> tuple[Tensor, Tensor]:
    """Simulate (X_t1, X_t2) jointly for many bridge paths.

    X_t1 is drawn from its marginal; X_t2 from the conditional Gaussian whose
    mean X_t1 + (t2-t1)/(1-t1) (x1 - X_t1) and variance s^2 (t2-t1)(1-t2)/(1-t1)
    follow from the bridge covariance structure. Used as the Monte-Carlo
    oracle for :func:`conditional_variance`.

    Returns:
        Arrays of shape (draws, D) for the states at t1 and t2.
    """
    s = _check_noise_scale(noise_scale)
    if not (0.0 <= t1 <= t2 <= 1.0) or t1 >= 1.0:
        raise DomainError(f"joint simulation requires 0 <= t1 <= t2 <= 1, t1 < 1, got ({t1}, {t2})")
    if draws < 1:
        raise ValueError("draws must be >= 1")
    d = pair.dimension
    mean1 = interpolate(pair, t1).ravel()
    std1 = math.sqrt(marginal_variance(t1, s))
    states1 = mean1 + std1 * gaussian(rng, (draws, d))
    pull = (t2 - t1) / (1.0 - t1)
    mean2 = states1 + pull * (pair.x1.ravel() - states1)
    std2 = math.sqrt(conditional_variance(t1, t2, s))
    states2 = mean2 + std2 * gaussian(rng, (draws, d))
    return states1, states2

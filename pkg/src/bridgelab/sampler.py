"""Stochastic integration of a velocity field from source toward target.

Each transition over [t_k, t_{k+1}] applies

    x <- x + dt * v(x, t_k) + eta * eps,    eps ~ N(0, I)

where the noise amplitude eta depends on the mode:

    standard:  eta = s * sqrt(dt)                      (locally constant variance)
    corrected: eta = s * sqrt(dt * (1 - t_{k+1}) / (1 - t_k))

The corrected amplitude matches the bridge's conditional variance over the
step, decays as t -> 1, and is exactly zero on the final step (t_{k+1} = 1),
so with the analytic conditional drift (x1 - x) / (1 - t) the sampler lands
on x1 exactly. The standard amplitude leaves residual endpoint noise of
variance s^2 * dt_{N-1}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Protocol

import numpy as np

from .bridge import EndpointPair
from .errors import DomainError, IntegrationError
from .numerics import RngStream, Tensor, gaussian
from .schedules import Schedule

MODE_STANDARD = "standard"
MODE_CORRECTED = "corrected"
_MODES = (MODE_STANDARD, MODE_CORRECTED)


class VelocityField(Protocol):
    """Evaluation contract: (state, time) -> velocity of identical shape.

    Conditioning, when present, is closed over by the callable; the sampler
    never inspects it.
    """

    def __call__(self, state: Tensor, t: float) -> Tensor: ...


def oracle_field(x1: Tensor) -> VelocityField:
    """Analytic conditional drift (x1 - x) / (1 - t), available when x1 is known.

    Ground-truth field for sampler verification; undefined at t = 1 (the
    sampler only ever evaluates fields at t_k < 1).
    """
    x1 = np.asarray(x1, dtype=np.float64)

    def field(state: Tensor, t: float) -> Tensor:
        return (x1 - state) / (1.0 - t)

    return field


@dataclass(frozen=True)
class SamplerStep:
    """One planned transition: index, interval, step size, and noise amplitude."""

    k: int
    t_start: float
    t_end: float
    dt: float
    eta: float


def noise_amplitude(mode: str, t_start: float, t_end: float, noise_scale: float) -> float:
    """Per-step noise amplitude eta for the given mode."""
    if mode not in _MODES:
        raise ValueError(f"unknown sampler mode {mode!r}")
    dt = t_end - t_start
    if dt <= 0.0 or t_start >= 1.0:
        raise DomainError(f"invalid step interval [{t_start}, {t_end}]")
    s = float(noise_scale)
    if mode == MODE_STANDARD:
        return s * math.sqrt(dt)
    return s * math.sqrt(dt * (1.0 - t_end) / (1.0 - t_start))


def plan_steps(schedule: Schedule, mode: str, noise_scale: float) -> list[SamplerStep]:
    """Expand a schedule into per-step transitions with precomputed amplitudes."""
    pts = schedule.points
    return [
        SamplerStep(
            k=k,
            t_start=float(pts[k]),
            t_end=float(pts[k + 1]),
            dt=float(pts[k + 1] - pts[k]),
            eta=noise_amplitude(mode, float(pts[k]), float(pts[k + 1]), noise_scale),
        )
        for k in range(schedule.n_steps)
    ]


def step(state: Tensor, field: VelocityField, sampler_step: SamplerStep, eps: Tensor) -> Tensor:
    """Single transition x + dt * v(x, t_k) + eta * eps with non-finite detection."""
    eps = np.asarray(eps, dtype=np.float64)
    if eps.shape != np.shape(state):
        raise ValueError(f"noise shape {eps.shape} does not match state {np.shape(state)}")
    drift = np.asarray(field(state, sampler_step.t_start), dtype=np.float64)
    if not np.all(np.isfinite(drift)):
        raise IntegrationError(
            f"velocity field returned non-finite values at step {sampler_step.k} "
            f"(t={sampler_step.t_start})",
            step_index=sampler_step.k,
        )
    new_state = state + sampler_step.dt * drift + sampler_step.eta * eps
    if not np.all(np.isfinite(new_state)):
        raise IntegrationError(
            f"state became non-finite at step {sampler_step.k} (t={sampler_step.t_end})",
            step_index=sampler_step.k,
        )
    return new_state


def sample(
    mode: str,
    x0: Tensor,
    field: VelocityField,
    schedule: Schedule,
    noise_scale: float,
    rng: RngStream,
    keep_trajectory: bool = True,
) -> list[Tensor]:
    """Integrate from x0 across the full schedule.

    Returns the trajectory [x_{t_0}, ..., x_{t_N}] (length N+1); the last
    element is the generated endpoint. With ``keep_trajectory=False`` only
    [x_{t_0}, x_{t_N}] is returned, for large step counts where intermediate
    states are not wanted.
    """
    state = np.asarray(x0, dtype=np.float64)
    trajectory = [state]
    for planned in plan_steps(schedule, mode, noise_scale):
        eps = gaussian(rng, state.shape)
        state = step(state, field, planned, eps)
        if keep_trajectory:
            trajectory.append(state)
    if not keep_trajectory:
        trajectory.append(state)
    return trajectory


@dataclass(frozen=True)
class EndpointStats:
    """Aggregate endpoint behavior over repeated stochastic runs.

    mean_error: signed bias, averaged over runs then over coordinates.
    mse:        mean of (endpoint - x1)^2 over runs and coordinates.
    variance:   per-coordinate variance over runs, averaged over coordinates.
    """

    mean_error: float
    mse: float
    variance: float
    runs: int


def simulate_endpoints(
    mode: str,
    x0: Tensor,
    field_batch: Callable[[Tensor, float], Tensor],
    schedule: Schedule,
    noise_scale: float,
    runs: int,
    rng: RngStream,
) -> Tensor:
    """Vectorized endpoint simulation: all runs advance in lockstep.

    ``field_batch`` must accept a (runs, D) state block and return drifts of
    the same shape; the pointwise fields here (oracle, model-backed) all
    broadcast that way. Per-step noise for the whole block comes from one
    stream, so results are reproducible and independent of any run ordering.
    """
    x0 = np.asarray(x0, dtype=np.float64).ravel()
    states = np.broadcast_to(x0, (runs, x0.size)).copy()
    for planned in plan_steps(schedule, mode, noise_scale):
        drift = np.asarray(field_batch(states, planned.t_start), dtype=np.float64)
        if not np.all(np.isfinite(drift)):
            raise IntegrationError(
                f"velocity field returned non-finite values at step {planned.k}",
                step_index=planned.k,
            )
        states = states + planned.dt * drift
        if planned.eta != 0.0:
            states += planned.eta * gaussian(rng, states.shape)
        if not np.all(np.isfinite(states)):
            raise IntegrationError(
                f"state became non-finite at step {planned.k}", step_index=planned.k
            )
    return states


def endpoint_statistics(
    mode: str,
    field: VelocityField,
    pair: EndpointPair,
    schedule: Schedule,
    noise_scale: float,
    runs: int,
    rng: RngStream,
) -> EndpointStats:
    """Endpoint bias, MSE against x1, and endpoint variance over repeated runs."""
    if runs < 2:
        raise ValueError("endpoint statistics need at least 2 runs")
    endpoints = simulate_endpoints(
        mode, pair.x0, field, schedule, noise_scale, runs, rng
    )
    target = pair.x1.ravel()
    errors = endpoints - target
    mean_error = float(np.mean(np.mean(errors, axis=0)))
    mse = float(np.mean(errors * errors))
    variance = float(np.mean(np.var(endpoints, axis=0, ddof=1)))
    return EndpointStats(mean_error=mean_error, mse=mse, variance=variance, runs=runs)

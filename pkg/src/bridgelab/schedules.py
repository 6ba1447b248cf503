"""Inference-time discretization schedules.

Besides the uniform grid, a shift coefficient gamma >= 1 reparameterizes the
grid to concentrate steps near t=0:

    t_i = i / (gamma N - (gamma - 1) i),   i.e.  t(u) = u / (gamma - (gamma-1) u)

with u = i/N. The map has dt/du = 1/gamma at u=0 (early densification) and is
convex on [0, 1], so step sizes grow monotonically for gamma > 1; gamma = 1 is
the identity and reproduces the uniform grid bitwise. Both endpoints are
forced to exactly 0 and 1, which the sampler's final noiseless step relies on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class Schedule:
    """Strictly increasing grid 0 = t_0 < ... < t_N = 1 with its generation parameters."""

    points: np.ndarray
    n_steps: int
    gamma: float = 1.0

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64)  # own an immutable copy
        if pts.ndim != 1 or pts.size != self.n_steps + 1:
            raise ValueError(f"schedule needs {self.n_steps + 1} points, got shape {pts.shape}")
        if pts[0] != 0.0 or pts[-1] != 1.0:
            raise ValueError("schedule must start at exactly 0 and end at exactly 1")
        if np.any(np.diff(pts) <= 0.0):
            raise ValueError("schedule must be strictly increasing")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)


def uniform(n_steps: int) -> Schedule:
    """Uniform schedule t_i = i / N."""
    if n_steps < 1:
        raise DomainError(f"step count must be >= 1, got {n_steps}")
    idx = np.arange(n_steps + 1, dtype=np.float64)
    pts = idx / float(n_steps)
    pts[0] = 0.0
    pts[-1] = 1.0
    return Schedule(points=pts, n_steps=n_steps, gamma=1.0)


def shifted(n_steps: int, gamma: float) -> Schedule:
    """Shifted schedule t_i = i / (gamma N - (gamma-1) i); gamma=1 is uniform."""
    if n_steps < 1:
        raise DomainError(f"step count must be >= 1, got {n_steps}")
    gamma = float(gamma)
    if gamma < 1.0:
        raise DomainError(f"shift coefficient must be >= 1, got {gamma}")
    idx = np.arange(n_steps + 1, dtype=np.float64)
    pts = idx / (gamma * n_steps - (gamma - 1.0) * idx)
    pts[0] = 0.0
    pts[-1] = 1.0
    return Schedule(points=pts, n_steps=n_steps, gamma=gamma)

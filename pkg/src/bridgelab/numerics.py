"""Dense float64 arrays and a counter-based, splittable random number source.

Everything downstream works on plain ``numpy.float64`` arrays ("tensors").
Randomness comes from :class:`RngStream`, a (seed, stream, counter) triple
mapped onto numpy's Philox counter-based bit generator: the 128-bit Philox
key is (seed, stream) and each draw starts at block ``counter << 64``, so
identical triples always reproduce identical output and distinct stream ids
give statistically independent sequences.

Normal variates use numpy's ziggurat sampler on the Philox keystream; this
fixes the bitwise-reproducibility contract of this implementation (a pinned
numpy provides stable streams, no reproducibility is claimed across
different normal-sampling algorithms).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Carrier type for all vector quantities (states, endpoints, parameters,
# gradients). Always float64, always finite after public operations.
Tensor = np.ndarray

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _splitmix64(z: int) -> int:
    z = (z + _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


@dataclass
class RngStream:
    """Deterministic random source identified by (seed, stream, counter).

    The counter advances by the number of elements drawn, so a call drawing
    an empty shape leaves the stream untouched and replaying a stream from a
    recorded counter reproduces the exact sequence.
    """

    seed: int
    stream: int = 0
    counter: int = 0

    def split(self, index: int) -> "RngStream":
        """Derive an independent child stream; does not consume randomness.

        Children with distinct indices (or from distinct parents) map to
        distinct Philox keys and are therefore independent streams.
        """
        mixed = _splitmix64((self.stream ^ _splitmix64(index & _MASK64)) & _MASK64)
        return RngStream(seed=self.seed, stream=mixed, counter=0)

    def _generator(self) -> np.random.Generator:
        key = np.array([self.seed & _MASK64, self.stream & _MASK64], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key, counter=self.counter << 64))


def gaussian(rng: RngStream, shape: int | tuple[int, ...] | list[int]) -> Tensor:
    """Draw i.i.d. standard normal entries, advancing the stream counter.

    Args:
        rng: stream to draw from; its counter advances by the element count.
        shape: output shape (non-negative dimensions).

    Returns:
        float64 array of the requested shape.
    """
    shape = (shape,) if isinstance(shape, int) else tuple(int(d) for d in shape)
    if any(d < 0 for d in shape):
        raise ValueError(f"invalid shape {shape}")
    n = math.prod(shape)
    if n == 0:
        return np.empty(shape, dtype=np.float64)
    out = rng._generator().standard_normal(n).reshape(shape)
    rng.counter += n
    return out


def uniform(rng: RngStream, shape: int | tuple[int, ...] | list[int]) -> Tensor:
    """Draw i.i.d. U[0, 1) entries, advancing the stream counter like gaussian."""
    shape = (shape,) if isinstance(shape, int) else tuple(int(d) for d in shape)
    if any(d < 0 for d in shape):
        raise ValueError(f"invalid shape {shape}")
    n = math.prod(shape)
    if n == 0:
        return np.empty(shape, dtype=np.float64)
    out = rng._generator().random(n).reshape(shape)
    rng.counter += n
    return out


def squared_norm(x: Tensor) -> float:
    """Sum of squared entries.

    Uses numpy's pairwise-compensated summation so that accumulation error
    stays far below the Monte-Carlo tolerances of the verification suites
    (relative error O(log n * eps) instead of O(n * eps)).
    """
    flat = np.asarray(x, dtype=np.float64).ravel()
    if flat.size == 0:
        return 0.0
    return float(np.sum(flat * flat))

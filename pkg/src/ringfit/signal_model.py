"""
Superposed damped sinusoids: synthesis, noise injection and standardization.

Units are microseconds for time and MHz for frequency, so ``f * t`` is
dimensionless. A waveform is a 1-D float64 array whose length matches the
sampling grid it was produced on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DegenerateInputError, InvalidInputError, InvalidParameterError

PARAM_NAMES = ("f", "phi", "tau", "A")


@dataclass(frozen=True)
class ComponentParams:
    """Parameters of one damped sinusoid ``A exp(-t/tau) cos(2 pi f t + phi)``.

    Attributes
    ----------
    f : float
        Frequency in MHz.
    phi : float
        Initial phase in radians.
    tau : float
        Decay time in microseconds, strictly positive.
    A : float
        Dimensionless amplitude.
    """

    f: float
    phi: float
    tau: float
    A: float

    def __post_init__(self):
        values = (self.f, self.phi, self.tau, self.A)
        if not all(math.isfinite(v) for v in values):
            raise InvalidParameterError(f"non-finite component parameter: {values}")
        if self.tau <= 0:
            raise InvalidParameterError(f"decay time must be positive, got tau={self.tau}")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.f, self.phi, self.tau, self.A)

    @classmethod
    def from_sequence(cls, values: Sequence[float]) -> "ComponentParams":
        f, phi, tau, A = (float(v) for v in values)
        return cls(f, phi, tau, A)


def params_to_vector(components: Iterable[ComponentParams]) -> np.ndarray:
    """Flatten components into ``(f0, phi0, tau0, A0, f1, ...)``."""
    return np.array([v for c in components for v in c.as_tuple()], dtype=np.float64)


def vector_to_params(vector: Sequence[float]) -> list[ComponentParams]:
    """Inverse of :func:`params_to_vector`."""
    vector = np.asarray(vector, dtype=np.float64)
    if vector.ndim != 1 or vector.size == 0 or vector.size % 4:
        raise InvalidInputError(
            f"parameter vector length must be a positive multiple of 4, got shape {vector.shape}"
        )
    return [ComponentParams.from_sequence(vector[i : i + 4]) for i in range(0, vector.size, 4)]


@dataclass(frozen=True)
class SamplingGrid:
    """Uniform sampling grid starting at t = 0; the end point is excluded.

    The default is 5 us at 200 MHz, i.e. 1000 samples.
    """

    duration: float = 5.0
    sample_rate: float = 200.0

    def __post_init__(self):
        if not (self.duration > 0 and self.sample_rate > 0):
            raise InvalidParameterError("duration and sample_rate must be positive")
        if self.n_samples < 1:
            raise InvalidParameterError("grid has no samples")

    @property
    def n_samples(self) -> int:
        return int(round(self.duration * self.sample_rate))

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_samples, dtype=np.float64) / self.sample_rate

    def to_dict(self) -> dict:
        return {"duration": self.duration, "sample_rate": self.sample_rate}


DEFAULT_GRID = SamplingGrid()


def synthesize(components: Sequence[ComponentParams], grid: SamplingGrid = DEFAULT_GRID) -> np.ndarray:
    """Evaluate the superposition of damped sinusoids on ``grid``.

    Components are accumulated in list order, so the result is bit-exact for a
    given parameter list.

    Raises
    ------
    InvalidInputError
        If ``components`` is empty.
    InvalidParameterError
        If any decay time is not positive.
    """
    if len(components) == 0:
        raise InvalidInputError("at least one component is required")
    t = grid.times
    x = np.zeros_like(t)
    for c in components:
        if not c.tau > 0:
            raise InvalidParameterError(f"decay time must be positive, got tau={c.tau}")
        x += c.A * np.exp(-t / c.tau) * np.cos(2.0 * np.pi * c.f * t + c.phi)
    return x


def add_noise(waveform: np.ndarray, sigma_noise: float, rng: np.random.Generator) -> np.ndarray:
    """Return ``waveform`` plus white Gaussian noise of standard deviation ``sigma_noise``.

    The input array is not modified.
    """
    if not sigma_noise >= 0:
        raise InvalidParameterError(f"sigma_noise must be >= 0, got {sigma_noise}")
    waveform = np.asarray(waveform, dtype=np.float64)
    return waveform + rng.normal(0.0, sigma_noise, size=waveform.shape)


def standardize(waveform: np.ndarray) -> np.ndarray:
    """Shift and scale a single waveform to zero mean and unit (population) std.

    Accepts a 2-D array as well, in which case each row is standardized
    independently.
    """
    w = np.asarray(waveform, dtype=np.float64)
    mean = w.mean(axis=-1, keepdims=True)
    centered = w - mean
    std = np.sqrt(np.mean(centered * centered, axis=-1, keepdims=True))
    if np.any(std == 0) or not np.all(np.isfinite(std)):
        raise DegenerateInputError("cannot standardize a constant waveform")
    return centered / std

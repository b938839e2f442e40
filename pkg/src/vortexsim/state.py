"""Shared value types: torus points, forcing events, vortex ensembles, law parameters.

Points on the torus are plain float arrays of shape (2,) or (n, 2) with
coordinates in [0, 1); wrap-around arithmetic is provided by
:func:`vortexsim.kernels.wrap` and friends.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "LawParams",
    "VortexEvent",
    "EventStream",
    "VortexEnsemble",
]

#: Atoms whose intensity would fall below this are never materialized when
#: sampling the infinite-age measure; the discarded tail contributes
#: (lam / 2 theta) * exp(-2 theta age_cutoff) * ||delta||^2 to second moments.
INTENSITY_FLOOR = 1e-8


@dataclass(frozen=True)
class LawParams:
    """Physical parameters: injection rate, damping rate, age horizon, CLT scaling."""

    lam: float
    theta: float
    big_m: float = 1.0
    n_scaling: int = 1

    def __post_init__(self) -> None:
        if not self.lam > 0:
            raise ValueError("lambda must be > 0")
        if self.theta < 0:
            raise ValueError("theta must be >= 0")
        if self.big_m < 0:
            raise ValueError("big_m must be >= 0 (or inf)")
        if math.isinf(self.big_m) and self.theta == 0:
            raise ValueError("big_m = inf requires theta > 0")
        if self.n_scaling < 1:
            raise ValueError("n_scaling must be >= 1")

    @property
    def rate(self) -> float:
        """Effective Poisson injection rate n_scaling * lambda."""
        return self.n_scaling * self.lam

    def age_cutoff(self) -> float:
        """Largest atom age kept by the samplers.

        Solves exp(-theta * age) = INTENSITY_FLOOR; finite big_m smaller than
        that wins.
        """
        if self.theta == 0:
            return self.big_m
        cutoff = -math.log(INTENSITY_FLOOR) / self.theta
        return min(self.big_m, cutoff)

    def age_tail_second_moment(self) -> float:
        """Second-moment mass per unit ||delta||^2 discarded by the age cutoff."""
        if math.isinf(self.big_m):
            return self.lam * math.exp(-2 * self.theta * self.age_cutoff()) / (2 * self.theta)
        return 0.0


@dataclass
class VortexEvent:
    """One forcing jump: a unit-intensity vortex born at ``birth_time``."""

    birth_time: float
    sign: int
    position: np.ndarray

    def __post_init__(self) -> None:
        if self.sign not in (-1, 1):
            raise ValueError("sign must be -1 or +1")
        self.position = np.asarray(self.position, dtype=float)


@dataclass
class EventStream:
    """One realization of the Poisson forcing on [0, horizon], sorted by birth time."""

    horizon: float
    times: np.ndarray
    signs: np.ndarray
    positions: np.ndarray

    def __post_init__(self) -> None:
        self.times = np.asarray(self.times, dtype=float)
        self.signs = np.asarray(self.signs, dtype=float)
        self.positions = np.asarray(self.positions, dtype=float).reshape(-1, 2)
        if not self.horizon > 0:
            raise ValueError("horizon must be > 0")
        if self.times.size:
            if np.any(np.diff(self.times) < 0):
                raise ValueError("event times must be sorted")
            if self.times[0] < 0 or self.times[-1] > self.horizon:
                raise ValueError("event times must lie in [0, horizon]")
        if not (self.times.size == self.signs.size == self.positions.shape[0]):
            raise ValueError("times, signs and positions must have equal length")
        if self.signs.size and not np.all(np.abs(self.signs) == 1):
            raise ValueError("signs must be -1 or +1")

    @classmethod
    def empty(cls, horizon: float) -> "EventStream":
        return cls(horizon, np.empty(0), np.empty(0), np.empty((0, 2)))

    @property
    def n_events(self) -> int:
        return int(self.times.size)

    def events(self) -> list[VortexEvent]:
        return [
            VortexEvent(float(t), int(s), p)
            for t, s, p in zip(self.times, self.signs, self.positions)
        ]


@dataclass
class VortexEnsemble:
    """Finite signed atomic measure sum_i xi_i * delta_{x_i}."""

    intensities: np.ndarray
    positions: np.ndarray

    def __post_init__(self) -> None:
        self.intensities = np.asarray(self.intensities, dtype=float).reshape(-1)
        self.positions = np.asarray(self.positions, dtype=float).reshape(-1, 2)
        if self.intensities.size != self.positions.shape[0]:
            raise ValueError("intensities and positions must have equal length")
        if self.intensities.size and not np.all(
            np.isfinite(self.intensities) & (self.intensities != 0)
        ):
            raise ValueError("intensities must be finite and nonzero")

    @classmethod
    def empty(cls) -> "VortexEnsemble":
        return cls(np.empty(0), np.empty((0, 2)))

    @property
    def n_atoms(self) -> int:
        return int(self.intensities.size)

    def couple(self, f) -> float:
        """<f, omega> = sum_i xi_i f(x_i) for a callable or test function ``f``."""
        if self.n_atoms == 0:
            return 0.0
        return float(np.sum(self.intensities * np.asarray(f(self.positions))))

"""Point-target radar returns and the ML angle-of-arrival estimator.

The delay and Doppler of the target are treated as known (zero by default),
so the ML search reduces to a one-dimensional scan over the angle grid.
The scan itself runs in :mod:`nspradar.kernels`.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import kernels
from .geometry import ArrayGeometry, receive_steering, steering_matrix, steering_table, transmit_steering
from .waveform import correlation_matrix

# Denominator floor relative to trace(R).
DENOMINATOR_FLOOR = 1e-12


class EstimationError(RuntimeError):
    """Every grid point had a degenerate ML denominator."""


@dataclass(frozen=True)
class MLGrid:
    """Uniform angle grid (degrees at construction, radians exposed)."""

    step_deg: float = 0.5
    lo_deg: float = -90.0
    hi_deg: float = 90.0

    def __post_init__(self):
        if not self.step_deg > 0:
            raise ValueError("grid step must be > 0")
        if self.hi_deg < self.lo_deg:
            raise ValueError("grid upper bound below lower bound")
        if self.lo_deg < -90.0 or self.hi_deg > 90.0:
            raise ValueError("grid must lie within [-90, 90] degrees")

    @property
    def degrees(self) -> np.ndarray:
        n = int(np.floor((self.hi_deg - self.lo_deg) / self.step_deg + 1e-9)) + 1
        return self.lo_deg + self.step_deg * np.arange(n)

    @property
    def angles(self) -> np.ndarray:
        return np.deg2rad(self.degrees)

    @property
    def step(self) -> float:
        return float(np.deg2rad(self.step_deg))

    def __len__(self):
        return self.degrees.size


@dataclass(frozen=True)
class ReceiveSnapshot:
    samples: np.ndarray
    true_angle: float
    path_gain: complex
    noise_power: float


@lru_cache(maxsize=32)
def _grid_steering(geometry: ArrayGeometry, grid: MLGrid):
    a_t, a_r = steering_table(geometry, grid.angles)
    a_t.setflags(write=False)
    a_r.setflags(write=False)
    return a_t, a_r


def complex_noise(shape, noise_power: float, rng: np.random.Generator) -> np.ndarray:
    """Circular complex Gaussian noise with per-entry variance ``noise_power``."""
    scale = np.sqrt(noise_power / 2)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def simulate_received(
    geometry: ArrayGeometry,
    waveform: np.ndarray,
    true_angle: float,
    path_gain: complex = 1.0,
    noise_power: float = 0.0,
    rng: np.random.Generator | None = None,
) -> ReceiveSnapshot:
    """Received samples ``y(n) = alpha A(theta) x(n) + n(n)``.

    Noise is drawn from ``rng`` only when ``noise_power > 0``. Passing
    identically seeded generators for different waveforms gives paired
    noise realizations.
    """
    if noise_power < 0:
        raise ValueError("noise_power must be >= 0")
    x = np.asarray(waveform)
    a = steering_matrix(receive_steering(geometry, true_angle), transmit_steering(geometry, true_angle))
    y = path_gain * (a @ x)
    if noise_power > 0:
        if rng is None:
            raise ValueError("rng required when noise_power > 0")
        y = y + complex_noise(y.shape, noise_power, rng)
    return ReceiveSnapshot(samples=y, true_angle=float(true_angle), path_gain=path_gain, noise_power=noise_power)


def matched_filter(y, x: np.ndarray, delay: int = 0, doppler: float = 0.0) -> np.ndarray:
    """Matched-filter matrix ``E = sum_n y(n) x(n - delay)^H exp(j doppler n)``.

    ``delay`` is an integer number of snapshots (samples shifted in from
    outside the window are zero) and ``doppler`` is in rad/snapshot.
    """
    y = y.samples if isinstance(y, ReceiveSnapshot) else np.asarray(y)
    x = np.asarray(x)
    if y.shape[1] != x.shape[1]:
        raise ValueError(f"snapshot count mismatch: y {y.shape} vs x {x.shape}")
    delay = int(delay)
    if delay:
        shifted = np.zeros_like(x)
        if delay > 0:
            shifted[:, delay:] = x[:, :-delay]
        else:
            shifted[:, :delay] = x[:, -delay:]
        x = shifted
    if doppler:
        y = y * np.exp(1j * doppler * np.arange(y.shape[1]))
    return y @ x.conj().T


def _floor(r: np.ndarray) -> float:
    return DENOMINATOR_FLOOR * float(np.real(np.trace(r)))


def ml_objective(angle: float, e: np.ndarray, r: np.ndarray, geometry: ArrayGeometry) -> float:
    """ML statistic at one angle; NaN when the denominator is below the floor."""
    a_t = transmit_steering(geometry, angle)[None, :]
    a_r = receive_steering(geometry, angle)[None, :]
    return float(kernels.ml_objective_grid(e, r, a_t, a_r, _floor(r))[0])


def objective_on_grid(e, r, grid: MLGrid, geometry: ArrayGeometry) -> np.ndarray:
    a_t, a_r = _grid_steering(geometry, grid)
    return kernels.ml_objective_grid(e, r, a_t, a_r, _floor(r))


def estimate_aoa_index(y, x_used: np.ndarray, r_used: np.ndarray | None, grid: MLGrid,
                       geometry: ArrayGeometry, delay: int = 0, doppler: float = 0.0) -> int:
    """Like :func:`estimate_aoa` but returns the winning grid index."""
    if len(grid) == 0:
        raise ValueError("empty grid")
    if r_used is None:
        r_used = correlation_matrix(x_used)
    e = matched_filter(y, x_used, delay, doppler)
    a_t, a_r = _grid_steering(geometry, grid)
    idx = kernels.ml_argmax(e, r_used, a_t, a_r, _floor(r_used))
    if idx < 0:
        raise EstimationError("ML denominator degenerate at every grid point")
    return int(idx)


def estimate_aoa(y, x_used: np.ndarray, r_used: np.ndarray | None, grid: MLGrid,
                 geometry: ArrayGeometry, delay: int = 0, doppler: float = 0.0) -> float:
    """Grid ML estimate of the angle of arrival, in radians.

    ``x_used`` is the waveform actually transmitted (original or projected)
    and ``r_used`` its correlation matrix; it is computed from ``x_used``
    when None. Ties resolve to the smallest angle.

    Raises
    ------
    EstimationError
        If no grid point has a usable denominator.
    """
    idx = estimate_aoa_index(y, x_used, r_used, grid, geometry, delay, doppler)
    return float(grid.angles[idx])

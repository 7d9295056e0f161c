"""Interference channel, wave-height perturbation and their statistics.

All samplers take an explicit ``numpy.random.Generator``; nothing here
touches global random state.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

REAL = "real"
COMPLEX = "complex"
PERTURBATION_STYLES = (REAL, COMPLEX)


@dataclass(frozen=True)
class PerturbationModel:
    """Rayleigh wave-height perturbation of the channel coefficients.

    ``h_rms`` is the rms wave height, used one-to-one as the scale of the
    channel-coefficient perturbation. With ``element_style="real"`` the
    entries are the raw nonnegative heights; ``"complex"`` attaches an
    independent uniform phase to each height.
    """

    h_rms: float
    element_style: str = REAL

    def __post_init__(self):
        if not self.h_rms >= 0:
            raise ValueError(f"h_rms must be >= 0, got {self.h_rms}")
        if self.element_style not in PERTURBATION_STYLES:
            raise ValueError(
                f"element_style must be one of {PERTURBATION_STYLES}, got {self.element_style!r}"
            )


def sample_interference_channel(n_rx: int, m_tx: int, rng: np.random.Generator) -> np.ndarray:
    """I.i.d. circular complex Gaussian channel with unit second moment."""
    shape = (int(n_rx), int(m_tx))
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def _unit_rayleigh(rng: np.random.Generator, size=None):
    # Rayleigh with E[h^2] = 1: h^2 is Exp(1).
    return np.sqrt(rng.standard_exponential(size))


def sample_wave_height(model: PerturbationModel, rng: np.random.Generator, size=None):
    """Draw wave heights from ``p(h) = 2h/h_rms^2 exp(-(h/h_rms)^2)``.

    Returns a float when ``size`` is None, otherwise an array. A model with
    ``h_rms == 0`` yields zeros (the draws are still consumed so the stream
    position does not depend on ``h_rms``).
    """
    return model.h_rms * _unit_rayleigh(rng, size)


def rms_wave_height(heights) -> float:
    """Root-mean-square of observed wave heights."""
    h = np.asarray(heights, dtype=float).ravel()
    if h.size == 0:
        raise ValueError("rms_wave_height needs at least one observation")
    return float(np.sqrt(np.mean(h * h)))


def sample_perturbation(
    n_rx: int, m_tx: int, model: PerturbationModel, rng: np.random.Generator
) -> np.ndarray:
    """Perturbation matrix ``dH`` with i.i.d. Rayleigh-magnitude entries.

    The magnitudes are ``h_rms`` times a unit-rms draw, so perturbations
    sampled from identically seeded streams are nested: they differ only by
    the scale factor.
    """
    shape = (int(n_rx), int(m_tx))
    mag = sample_wave_height(model, rng, size=shape)
    if model.element_style == COMPLEX:
        phase = rng.uniform(0.0, 2 * np.pi, size=shape)
        return mag * np.exp(1j * phase)
    return mag.astype(complex)


def perturbed_channel(h: np.ndarray, dh: np.ndarray) -> np.ndarray:
    """``H + dH``; shapes must agree exactly."""
    h = np.asarray(h)
    dh = np.asarray(dh)
    if h.shape != dh.shape:
        raise ValueError(f"channel shape {h.shape} != perturbation shape {dh.shape}")
    return h + dh


def vec(m: np.ndarray) -> np.ndarray:
    """Column-stacking operator."""
    return np.asarray(m).reshape(-1, order="F")


def empirical_second_moment(samples) -> np.ndarray:
    """Average of ``vec(dH) vec(dH)^H`` over the given draws.

    No mean is subtracted. ``samples`` may be a sequence of matrices or a
    3-D array with the draw index first.
    """
    stack = np.asarray(samples)
    if stack.ndim != 3 or stack.shape[0] == 0:
        raise ValueError("need at least one 2-D perturbation sample")
    v = np.transpose(stack, (0, 2, 1)).reshape(stack.shape[0], -1)
    m = v.T @ v.conj() / stack.shape[0]
    return (m + m.conj().T) / 2

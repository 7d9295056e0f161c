"""Uniform linear array geometry and steering vectors.

Angles are measured from broadside in radians. Element 0 is the phase
reference and spacing is expressed in carrier wavelengths, so the carrier
frequency only enters through the narrowband phase ``2*pi*d*k*sin(theta)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ArrayGeometry:
    """Colocated MIMO radar with ULA transmit and receive arrays.

    Parameters
    ----------
    num_tx : int
        Number of transmit elements M_T.
    num_rx : int
        Number of receive elements M_R.
    element_spacing : float
        Inter-element spacing in wavelengths.
    carrier_angular_frequency : float
        Carrier angular frequency in rad/s. Kept for bookkeeping; the
        narrowband steering phases depend only on spacing in wavelengths.
    """

    num_tx: int
    num_rx: int
    element_spacing: float = 0.5
    carrier_angular_frequency: float = 2 * np.pi * 3.55e9

    def __post_init__(self):
        if int(self.num_tx) < 1 or int(self.num_rx) < 1:
            raise ValueError("num_tx and num_rx must be >= 1")
        if not self.element_spacing > 0:
            raise ValueError("element_spacing must be > 0")


def _ula_response(num_elements: int, spacing: float, angles) -> np.ndarray:
    k = np.arange(num_elements)
    phase = 2 * np.pi * spacing * np.multiply.outer(np.sin(angles), k)
    return np.exp(-1j * phase)


def transmit_steering(geometry: ArrayGeometry, angle: float) -> np.ndarray:
    """Transmit steering vector a_T(angle), length M_T.

    Entry k is ``exp(-j 2 pi d k sin(angle))``.
    """
    return _ula_response(geometry.num_tx, geometry.element_spacing, float(angle))


def receive_steering(geometry: ArrayGeometry, angle: float) -> np.ndarray:
    """Receive steering vector a_R(angle), length M_R."""
    return _ula_response(geometry.num_rx, geometry.element_spacing, float(angle))


def steering_matrix(a_r: np.ndarray, a_t: np.ndarray) -> np.ndarray:
    """Transmit-receive steering matrix ``A = a_R a_T^T`` (plain transpose)."""
    return np.outer(a_r, a_t)


def steering_table(geometry: ArrayGeometry, angles) -> tuple[np.ndarray, np.ndarray]:
    """Steering vectors for a whole grid at once.

    Returns
    -------
    a_t : ndarray, shape (G, M_T)
    a_r : ndarray, shape (G, M_R)
        Row g holds the steering vector for ``angles[g]``.
    """
    angles = np.atleast_1d(np.asarray(angles, dtype=float))
    a_t = _ula_response(geometry.num_tx, geometry.element_spacing, angles)
    a_r = _ula_response(geometry.num_rx, geometry.element_spacing, angles)
    return np.ascontiguousarray(a_t), np.ascontiguousarray(a_r)

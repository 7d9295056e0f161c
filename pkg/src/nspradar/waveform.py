"""Constant-envelope orthogonal BPSK radar waveforms."""
from __future__ import annotations

import numpy as np


def _hadamard(n: int) -> np.ndarray:
    # Sylvester construction; n must be a power of two.
    h = np.ones((1, 1))
    while h.shape[0] < n:
        h = np.block([[h, h], [h, -h]])
    return h


def generate_orthogonal_bpsk(num_tx: int, num_samples: int) -> np.ndarray:
    """Orthogonal BPSK waveform matrix X of shape (num_tx, num_samples).

    Rows are Walsh-Hadamard sign patterns tiled over the ``num_samples``
    snapshots and scaled by ``1/sqrt(num_samples)``, so every sample has the
    same magnitude and ``X @ X.conj().T`` is the identity.

    Raises
    ------
    ValueError
        If ``num_samples < num_tx`` or ``num_samples`` is not a multiple of
        the smallest power of two that is ``>= num_tx``.
    """
    num_tx = int(num_tx)
    num_samples = int(num_samples)
    if num_tx < 1:
        raise ValueError("num_tx must be >= 1")
    if num_samples < num_tx:
        raise ValueError(
            f"num_samples={num_samples} < num_tx={num_tx}: orthogonal rows impossible"
        )
    order = 1 << (num_tx - 1).bit_length()
    if num_samples % order:
        raise ValueError(
            f"num_samples={num_samples} must be a multiple of {order} for num_tx={num_tx}"
        )
    rows = _hadamard(order)[:num_tx]
    signs = np.tile(rows, num_samples // order)
    return signs.astype(complex) / np.sqrt(num_samples)


def correlation_matrix(waveform: np.ndarray) -> np.ndarray:
    """Waveform correlation ``R = X X^H`` summed over snapshots."""
    x = np.asarray(waveform)
    return x @ x.conj().T

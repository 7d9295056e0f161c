"""Null-space projection of the radar waveform.

The null space of the interference channel comes from a full SVD; only the
projector ``P = V V^H`` is consumed downstream, so the usual sign/rotation
ambiguity of the basis never matters.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_REL_TOLERANCE = 1e-8


class NoNullSpaceError(ValueError):
    """The channel has full column rank, so nothing can be nulled."""


@dataclass(frozen=True)
class NullSpaceBasis:
    """Orthonormal null-space basis of a channel.

    Attributes
    ----------
    columns : ndarray, shape (M_T, k)
        Right singular vectors whose singular values vanish.
    singular_values : ndarray
        All singular values of the decomposed channel, descending.
    tolerance : float
        Relative threshold used to decide which singular values vanish.
    """

    columns: np.ndarray
    singular_values: np.ndarray
    tolerance: float

    @property
    def nullity(self) -> int:
        return self.columns.shape[1]


def null_space_basis(h: np.ndarray, rel_tolerance: float = DEFAULT_REL_TOLERANCE) -> NullSpaceBasis:
    """Null-space basis of ``h`` via SVD.

    Singular values ``<= rel_tolerance * sigma_max`` count as zero; all right
    singular vectors beyond ``min(N_R, M_T)`` are in the null space too.

    Raises
    ------
    NoNullSpaceError
        If the effective rank equals the number of columns.
    """
    h = np.atleast_2d(np.asarray(h, dtype=complex))
    if h.size == 0:
        raise ValueError("channel matrix is empty")
    if not rel_tolerance > 0:
        raise ValueError("rel_tolerance must be > 0")
    _, s, vh = np.linalg.svd(h, full_matrices=True)
    smax = s[0] if s.size else 0.0
    rank = int(np.count_nonzero(s > rel_tolerance * smax)) if smax > 0 else 0
    m_tx = h.shape[1]
    if rank >= m_tx:
        raise NoNullSpaceError(
            f"channel {h.shape} has rank {rank} = M_T; null-space sharing impossible"
        )
    columns = vh[rank:].conj().T
    return NullSpaceBasis(columns=columns, singular_values=s, tolerance=rel_tolerance)


def projector(basis: NullSpaceBasis | np.ndarray) -> np.ndarray:
    """Orthogonal projector ``V V^H`` onto the span of the basis columns."""
    v = basis.columns if isinstance(basis, NullSpaceBasis) else np.asarray(basis)
    v = np.atleast_2d(v)
    if v.ndim != 2 or v.shape[1] == 0:
        raise ValueError("projector needs a basis with at least one column")
    p = v @ v.conj().T
    return (p + p.conj().T) / 2


def null_space_projector(h: np.ndarray, rel_tolerance: float = DEFAULT_REL_TOLERANCE) -> np.ndarray:
    """Shortcut for ``projector(null_space_basis(h, rel_tolerance))``."""
    return projector(null_space_basis(h, rel_tolerance))


def project_waveform(p: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Projected waveform ``P X``."""
    p = np.asarray(p)
    x = np.asarray(x)
    if p.ndim != 2 or p.shape[0] != p.shape[1] or p.shape[1] != x.shape[0]:
        raise ValueError(f"projector {p.shape} incompatible with waveform {x.shape}")
    return p @ x


def leakage(h_true: np.ndarray, x_proj: np.ndarray) -> float:
    """Relative interference leakage ``||H X||_F / ||X||_F`` (0 for X = 0)."""
    x_proj = np.asarray(x_proj)
    xn = np.linalg.norm(x_proj)
    if xn == 0:
        return 0.0
    return float(np.linalg.norm(np.asarray(h_true) @ x_proj) / xn)

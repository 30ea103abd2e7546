"""Per-class centering of Gram quantities.

Centering subtracts the class prototype (the support mean in feature
space) without ever materializing features: the centered support Gram
holds inner products of mean-subtracted support features, the cross
vector holds inner products of the mean-subtracted query against each of
those, and the centered query norm is the squared feature-space distance
from the query to the prototype.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError, DimensionMismatchError, NumericalError

#: Negative centered query norms larger in magnitude than this indicate a
#: non-PSD kernel or numerical corruption rather than roundoff.
QUERY_NORM_TOL = 1e-9


@dataclass(frozen=True)
class CenteredGram:
    """Centered quantities for one (support class, query) pair."""

    ktilde_ss: np.ndarray
    cross: np.ndarray
    query_norm: float


def _validated_gram(k_ss) -> np.ndarray:
    k = np.asarray(k_ss, dtype=np.float64)
    if k.ndim != 2 or k.shape[0] != k.shape[1] or k.shape[0] < 1:
        raise DataError(f"support Gram must be a square matrix, got shape {k.shape}")
    return k


def _validated_cross(k: np.ndarray, kappa_qs) -> np.ndarray:
    kappa = np.asarray(kappa_qs, dtype=np.float64)
    if kappa.ndim != 1:
        raise DataError(f"cross kernel values must be 1-D, got shape {kappa.shape}")
    if kappa.shape[0] != k.shape[0]:
        raise DimensionMismatchError(k.shape[0], kappa.shape[0], "cross kernel values")
    return kappa


def center_support(k_ss) -> np.ndarray:
    """Double-center a support Gram matrix.

    Entrywise K[i,j] - rowmean_i - colmean_j + grandmean, equivalently
    H K H with H = I - (1/n) 11^T; re-symmetrized by averaging with the
    transpose.  Every row and column of the result sums to zero.
    """
    k = _validated_gram(k_ss)
    row = k.mean(axis=1, keepdims=True)
    col = k.mean(axis=0, keepdims=True)
    centered = k - row - col + k.mean()
    return 0.5 * (centered + centered.T)


def center_cross(k_ss, kappa_qs) -> np.ndarray:
    """Centered query/support cross vector.

    Entry i is kappa[i] - mean(kappa) - rowmean_i(K) + grandmean(K): the
    inner product of the mean-subtracted query feature with the i-th
    mean-subtracted support feature.
    """
    k = _validated_gram(k_ss)
    kappa = _validated_cross(k, kappa_qs)
    return kappa - kappa.mean() - k.mean(axis=1) + k.mean()


def centered_query_norm(k_ss, kappa_qs, k_qq) -> float:
    """Squared feature-space distance from the query to the class prototype.

    k_qq + grandmean(K) - 2 mean(kappa).  Values in (-QUERY_NORM_TOL, 0)
    clamp to zero; anything more negative raises.
    """
    k = _validated_gram(k_ss)
    kappa = _validated_cross(k, kappa_qs)
    value = float(k_qq) + float(k.mean()) - 2.0 * float(kappa.mean())
    if value < 0.0:
        if value < -QUERY_NORM_TOL:
            raise NumericalError(
                f"centered query norm {value:.3e} is negative beyond tolerance "
                f"{QUERY_NORM_TOL:g}; the kernel may not be positive semidefinite"
            )
        return 0.0
    return value


def centered_gram(k_ss, kappa_qs, k_qq) -> CenteredGram:
    """Bundle all three centered quantities for one (class, query) pair."""
    return CenteredGram(
        center_support(k_ss),
        center_cross(k_ss, kappa_qs),
        centered_query_norm(k_ss, kappa_qs, k_qq),
    )

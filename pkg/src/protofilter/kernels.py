"""Kernel functions and raw Gram-matrix construction.

Two kernels are supported: the identity (linear) kernel <x, y> and the
RBF kernel exp(-||x - y||^2 / (2 sigma^2)).  Everything is float64; the
eigendecompositions downstream are sensitive to Gram-matrix noise.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ConfigurationError, DataError, DimensionMismatchError


class KernelKind(str, Enum):
    IDENTITY = "identity"
    RBF = "rbf"


@dataclass(frozen=True)
class KernelSpec:
    """Kernel choice plus hyperparameters.

    ``bandwidth_sq`` is the RBF sigma^2, in units of squared embedding
    distance.  ``None`` means "use the default for the data dimension"
    (see :func:`resolve_kernel`); the identity kernel ignores it.
    """

    kind: KernelKind = KernelKind.IDENTITY
    bandwidth_sq: float | None = None

    def __post_init__(self) -> None:
        if self.bandwidth_sq is not None and not self.bandwidth_sq > 0:
            raise ConfigurationError(
                f"kernel bandwidth_sq must be positive, got {self.bandwidth_sq}"
            )


@dataclass(frozen=True)
class GramBundle:
    """Raw kernel quantities for one (support class, query) pair.

    ``kappa_qs`` and ``k_qq`` are the compact forms of the replicated
    n x n query/support and query/query blocks: the former's columns are
    all identical, the latter's entries all equal k(q, q).
    """

    k_ss: np.ndarray
    kappa_qs: np.ndarray
    k_qq: float


def default_rbf_bandwidth(dim: int) -> float:
    """Default RBF bandwidth sigma^2: the embedding dimension."""
    if dim < 1:
        raise ConfigurationError(f"embedding dimension must be >= 1, got {dim}")
    return float(dim)


def resolve_kernel(spec: KernelSpec, dim: int) -> KernelSpec:
    """Return ``spec`` with an unset RBF bandwidth filled in for ``dim``."""
    if spec.kind is KernelKind.RBF and spec.bandwidth_sq is None:
        return KernelSpec(KernelKind.RBF, default_rbf_bandwidth(dim))
    return spec


def _rbf_bandwidth(spec: KernelSpec) -> float:
    if spec.bandwidth_sq is None:
        raise ConfigurationError(
            "RBF kernel bandwidth_sq is unset; resolve it against the data dimension first"
        )
    return float(spec.bandwidth_sq)


def _as_vector(x, name: str) -> np.ndarray:
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1 or v.shape[0] < 1:
        raise DataError(f"{name} must be a nonempty 1-D real vector, got shape {v.shape}")
    return v


def _as_matrix(support) -> np.ndarray:
    try:
        s = np.asarray(support, dtype=np.float64)
    except (ValueError, TypeError) as exc:
        raise DataError(f"support vectors must share one dimension: {exc}") from None
    if s.ndim != 2 or s.shape[0] < 1 or s.shape[1] < 1:
        raise DataError(
            f"support must be a nonempty sequence of equal-length vectors, got shape {s.shape}"
        )
    return s


def kernel_eval(spec: KernelSpec, x, y) -> float:
    """Evaluate k(x, y) for one pair of embedding vectors."""
    xv = _as_vector(x, "x")
    yv = _as_vector(y, "y")
    if xv.shape[0] != yv.shape[0]:
        raise DimensionMismatchError(xv.shape[0], yv.shape[0], "kernel arguments")
    if spec.kind is KernelKind.IDENTITY:
        return float(xv @ yv)
    diff = xv - yv
    return float(np.exp(-(diff @ diff) / (2.0 * _rbf_bandwidth(spec))))


def gram_support(spec: KernelSpec, support) -> np.ndarray:
    """n x n support Gram matrix with entry (i, j) = k(s_i, s_j).

    Exactly symmetric by construction (averaged with its own transpose).
    """
    s = _as_matrix(support)
    if spec.kind is KernelKind.IDENTITY:
        k = s @ s.T
    else:
        diff = s[:, None, :] - s[None, :, :]
        sq = np.einsum("ijk,ijk->ij", diff, diff)
        k = np.exp(-sq / (2.0 * _rbf_bandwidth(spec)))
    return 0.5 * (k + k.T)


def gram_query(spec: KernelSpec, support, query) -> tuple[np.ndarray, float]:
    """Kernel values of one query against a support set.

    Returns ``(kappa, k_qq)`` with ``kappa[i] = k(s_i, q)`` and
    ``k_qq = k(q, q)``.
    """
    s = _as_matrix(support)
    q = _as_vector(query, "query")
    if q.shape[0] != s.shape[1]:
        raise DimensionMismatchError(s.shape[1], q.shape[0], "query vector")
    if spec.kind is KernelKind.IDENTITY:
        return s @ q, float(q @ q)
    diff = s - q[None, :]
    sq = np.einsum("ij,ij->i", diff, diff)
    return np.exp(-sq / (2.0 * _rbf_bandwidth(spec))), 1.0


def gram_bundle(spec: KernelSpec, support, query) -> GramBundle:
    """Convenience constructor for all raw kernel quantities at once."""
    k_ss = gram_support(spec, support)
    kappa, k_qq = gram_query(spec, support, query)
    return GramBundle(k_ss, kappa, k_qq)

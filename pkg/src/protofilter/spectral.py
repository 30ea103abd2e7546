"""Symmetric eigendecomposition and the spectral filter family.

The eigensolver is a cyclic Jacobi iteration.  Inputs are shot-count
sized (rarely beyond 20 x 20), so robustness and determinism matter more
than asymptotic speed: the sweep order is fixed, eigenvalues are sorted
descending with a stable sort, and each eigenvector's largest-magnitude
entry is made positive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ConfigurationError, DataError, NumericalError

#: Eigenvalues below this are stored as exactly zero.
EIGENVALUE_CLAMP = 1e-12
#: Eigenvalues below minus this are an error: the input was not PSD.
NEGATIVE_EIGENVALUE_TOL = 1e-9

_SYMMETRY_TOL = 1e-8
_OFFDIAG_TOL = 1e-11
_MAX_SWEEPS = 100


@dataclass(frozen=True)
class EigenSystem:
    """Eigenvalues (descending, clamped nonnegative) and orthonormal
    eigenvectors (columns) of a centered support Gram matrix."""

    values: np.ndarray
    vectors: np.ndarray

    @property
    def max_value(self) -> float:
        return float(self.values[0])


class FilterKind(str, Enum):
    ZERO = "zero"
    TIKHONOV = "tikhonov"
    TRUNCATED_SVD = "tsvd"


@dataclass(frozen=True)
class AbsoluteLambda:
    """Use one fixed shrinkage parameter for every class."""

    value: float

    def __post_init__(self) -> None:
        if not self.value >= 0:
            raise ConfigurationError(f"shrinkage parameter must be >= 0, got {self.value}")


@dataclass(frozen=True)
class RelativeToMaxEigenvalue:
    """Per class, use ``ratio`` times the largest eigenvalue of that
    class's centered support Gram."""

    ratio: float

    def __post_init__(self) -> None:
        if not self.ratio >= 0:
            raise ConfigurationError(f"shrinkage ratio must be >= 0, got {self.ratio}")


LambdaPolicy = AbsoluteLambda | RelativeToMaxEigenvalue


@dataclass(frozen=True)
class FilterSpec:
    """Filter-function choice plus the shrinkage-parameter policy.

    The zero filter ignores the policy entirely; truncated SVD requires
    the resolved parameter to be strictly positive.
    """

    kind: FilterKind
    lambda_policy: LambdaPolicy


def _offdiag_norm(a: np.ndarray) -> float:
    off = a - np.diag(np.diag(a))
    return float(np.linalg.norm(off))


def _rotate(a: np.ndarray, vecs: np.ndarray, p: int, q: int) -> None:
    apq = a[p, q]
    if apq == 0.0:
        return
    tau = (a[q, q] - a[p, p]) / (2.0 * apq)
    t = math.copysign(1.0, tau) / (abs(tau) + math.hypot(1.0, tau))
    c = 1.0 / math.sqrt(t * t + 1.0)
    s = t * c
    cp = a[:, p].copy()
    cq = a[:, q].copy()
    a[:, p] = c * cp - s * cq
    a[:, q] = s * cp + c * cq
    rp = a[p, :].copy()
    rq = a[q, :].copy()
    a[p, :] = c * rp - s * rq
    a[q, :] = s * rp + c * rq
    # the rotation annihilates this pair analytically
    a[p, q] = 0.0
    a[q, p] = 0.0
    vp = vecs[:, p].copy()
    vq = vecs[:, q].copy()
    vecs[:, p] = c * vp - s * vq
    vecs[:, q] = s * vp + c * vq


def _clamp_spectrum(values: np.ndarray) -> np.ndarray:
    lowest = float(values.min())
    if lowest < -NEGATIVE_EIGENVALUE_TOL:
        raise NumericalError(
            f"eigenvalue {lowest:.3e} below -{NEGATIVE_EIGENVALUE_TOL:g}; "
            "input matrix was not positive semidefinite"
        )
    out = values.copy()
    out[out < EIGENVALUE_CLAMP] = 0.0
    return out


def symmetric_eig(matrix) -> EigenSystem:
    """Eigendecomposition of a symmetric PSD matrix by cyclic Jacobi sweeps.

    Converges when the off-diagonal Frobenius norm falls below 1e-11
    (scaled by the matrix Frobenius norm when that exceeds one); errors
    after 100 sweeps otherwise.  Eigenvalues below the clamp threshold
    are stored as exactly zero; values below -1e-9 raise.
    """
    a = np.array(matrix, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise DataError(f"matrix must be square, got shape {a.shape}")
    if float(np.max(np.abs(a - a.T))) > _SYMMETRY_TOL:
        raise DataError(f"matrix is not symmetric within {_SYMMETRY_TOL:g}")
    a = 0.5 * (a + a.T)
    n = a.shape[0]
    vecs = np.eye(n)
    tol = _OFFDIAG_TOL * max(1.0, float(np.linalg.norm(a)))
    for _ in range(_MAX_SWEEPS):
        if _offdiag_norm(a) <= tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                _rotate(a, vecs, p, q)
    else:
        residual = _offdiag_norm(a)
        if residual > tol:
            raise NumericalError(
                f"Jacobi iteration did not converge in {_MAX_SWEEPS} sweeps; "
                f"off-diagonal residual {residual:.3e} exceeds {tol:.3e}"
            )
    values = np.diag(a).copy()
    order = np.argsort(-values, kind="stable")
    values = _clamp_spectrum(values[order])
    vecs = vecs[:, order]
    for j in range(n):
        column = vecs[:, j]
        if column[int(np.argmax(np.abs(column)))] < 0.0:
            vecs[:, j] = -column
    return EigenSystem(values, vecs)


def filter_weight(spec: FilterSpec, gamma: float, lam: float) -> float:
    """Filter weight h(gamma, lambda) for one eigenvalue.

    Zero: 0.  Tikhonov: 1 / (gamma + lambda).  Truncated SVD: 1 / gamma
    when gamma >= lambda, else 0.
    """
    if gamma < 0:
        raise NumericalError(f"eigenvalue must be nonnegative, got {gamma}")
    if lam < 0:
        raise ConfigurationError(f"shrinkage parameter must be nonnegative, got {lam}")
    if spec.kind is FilterKind.ZERO:
        return 0.0
    if spec.kind is FilterKind.TIKHONOV:
        denom = gamma + lam
        if denom == 0.0:
            raise NumericalError(
                "Tikhonov filter weight undefined: eigenvalue and shrinkage "
                "parameter are both zero"
            )
        return 1.0 / denom
    if lam <= 0.0:
        raise ConfigurationError(
            "truncated-SVD filtering requires a strictly positive shrinkage parameter"
        )
    return 1.0 / gamma if gamma >= lam else 0.0


def resolve_lambda(policy: LambdaPolicy, eigensystem: EigenSystem) -> float:
    """Resolve a shrinkage policy against one class's spectrum."""
    if isinstance(policy, AbsoluteLambda):
        return float(policy.value)
    if isinstance(policy, RelativeToMaxEigenvalue):
        return float(policy.ratio) * eigensystem.max_value
    raise ConfigurationError(f"unknown shrinkage policy: {policy!r}")


def filter_matrix(eigensystem: EigenSystem, spec: FilterSpec, lam: float) -> np.ndarray:
    """Assemble V diag(h(gamma_i, lambda)) V^T; symmetric by construction."""
    weights = np.array(
        [filter_weight(spec, float(g), lam) for g in eigensystem.values]
    )
    v = eigensystem.vectors
    g = (v * weights) @ v.T
    return 0.5 * (g + g.T)


def format_lambda_policy(policy: LambdaPolicy) -> str:
    """Canonical text form: ``absolute=<v>`` or ``relative=<v>``."""
    if isinstance(policy, AbsoluteLambda):
        return f"absolute={policy.value:g}"
    if isinstance(policy, RelativeToMaxEigenvalue):
        return f"relative={policy.ratio:g}"
    raise ConfigurationError(f"unknown shrinkage policy: {policy!r}")


def parse_lambda_policy(text: str) -> LambdaPolicy:
    """Parse ``absolute=<v>``, ``relative=<v>``, or ``none`` (= absolute 0)."""
    cleaned = text.strip().lower()
    if cleaned == "none":
        return AbsoluteLambda(0.0)
    name, _, raw = cleaned.partition("=")
    if not raw:
        raise ConfigurationError(
            f"shrinkage policy must look like 'absolute=1' or 'relative=0.1', got {text!r}"
        )
    try:
        value = float(raw)
    except ValueError:
        raise ConfigurationError(f"shrinkage policy value {raw!r} is not a number") from None
    if name == "absolute":
        return AbsoluteLambda(value)
    if name == "relative":
        return RelativeToMaxEigenvalue(value)
    raise ConfigurationError(f"unknown shrinkage policy kind {name!r}")

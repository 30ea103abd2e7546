"""Filtered relative-prototype distances, class probabilities, and episode
classification.

Also holds three independent reference paths used to cross-check the
Gram-domain implementation: an explicit-feature evaluation (identity
kernel), the prototype-only squared distance, the subspace-projection
residual distance, and a replicated-matrix evaluation that spells out the
full n x n blocks and works for any kernel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .centering import center_cross, center_support, centered_query_norm
from .errors import (
    ConfigurationError,
    DataError,
    DimensionMismatchError,
    NumericalError,
    ProtofilterError,
)
from .kernels import (
    KernelSpec,
    _as_matrix,
    _as_vector,
    gram_query,
    gram_support,
    kernel_eval,
    resolve_kernel,
)
from .spectral import (
    EIGENVALUE_CLAMP,
    FilterSpec,
    filter_matrix,
    filter_weight,
    resolve_lambda,
    symmetric_eig,
)

#: Squared distances below -DISTANCE_TOL are an error; within it they clamp to 0.
DISTANCE_TOL = 1e-9


@dataclass(frozen=True)
class EpisodeResult:
    """Per-query squared distances and class probabilities (both m x C),
    argmin-distance predictions, and the mean episode loss."""

    dist_sq: np.ndarray
    probs: np.ndarray
    predicted: np.ndarray
    loss: float


def _with_context(exc: ProtofilterError, context: str) -> ProtofilterError:
    exc.args = (f"{context}: {exc}",)
    return exc


def shrinkage_coefficients(filter_mat, cross) -> np.ndarray:
    """Expansion coefficients of the removed component over the centered
    support features: the filter matrix applied to the cross vector."""
    g = np.asarray(filter_mat, dtype=np.float64)
    b = np.asarray(cross, dtype=np.float64)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise DataError(f"filter matrix must be square, got shape {g.shape}")
    if b.ndim != 1 or b.shape[0] != g.shape[0]:
        raise DimensionMismatchError(g.shape[0], b.shape[0] if b.ndim == 1 else -1, "cross vector")
    return g @ b


def distance_sq(coefficients, ktilde_ss, cross, query_norm: float) -> float:
    """Squared norm of the filtered relative prototype.

    a^T Kt a + q_norm - 2 a^T b.  Values in (-DISTANCE_TOL, 0) clamp to
    zero; more negative ones raise instead of being silently hidden.
    """
    a = np.asarray(coefficients, dtype=np.float64)
    k = np.asarray(ktilde_ss, dtype=np.float64)
    b = np.asarray(cross, dtype=np.float64)
    if k.ndim != 2 or k.shape[0] != k.shape[1]:
        raise DataError(f"centered Gram must be square, got shape {k.shape}")
    if a.shape != (k.shape[0],) or b.shape != (k.shape[0],):
        raise DataError(
            f"coefficients {a.shape} and cross vector {b.shape} must both have length {k.shape[0]}"
        )
    value = float(a @ k @ a) + float(query_norm) - 2.0 * float(a @ b)
    if value < 0.0:
        if value < -DISTANCE_TOL:
            raise NumericalError(
                f"squared distance {value:.3e} is negative beyond tolerance {DISTANCE_TOL:g}"
            )
        return 0.0
    return value


def explicit_feature_distance(support, query, filter_spec: FilterSpec, lam: float) -> float:
    """Filtered relative-prototype distance computed on explicit features
    (identity-kernel semantics).

    Builds the class mean, the unnormalized covariance sum r_i r_i^T of
    mean-subtracted support features, takes its eigenpairs with numpy's
    solver, removes h(gamma, lambda) * gamma times each eigencomponent of
    (query - mean), and returns the squared norm of the remainder.  This
    is the brute-force reference for the Gram-domain path.
    """
    s = _as_matrix(support)
    q = _as_vector(query, "query")
    if q.shape[0] != s.shape[1]:
        raise DimensionMismatchError(s.shape[1], q.shape[0], "query vector")
    mean = s.mean(axis=0)
    centered = s - mean
    cov = centered.T @ centered
    values, vectors = np.linalg.eigh(cov)
    rel = q - mean
    removed = np.zeros_like(rel)
    for gamma, w in zip(values, vectors.T):
        if gamma <= EIGENVALUE_CLAMP:
            continue
        removed += filter_weight(filter_spec, float(gamma), lam) * float(gamma) * float(rel @ w) * w
    residual = rel - removed
    return float(residual @ residual)


def protonet_distance(support, query) -> float:
    """Squared distance from the query to the support mean."""
    s = _as_matrix(support)
    q = _as_vector(query, "query")
    if q.shape[0] != s.shape[1]:
        raise DimensionMismatchError(s.shape[1], q.shape[0], "query vector")
    diff = q - s.mean(axis=0)
    return float(diff @ diff)


def dsn_distance(support, query, subspace_dim: int) -> float:
    """Squared residual of (query - mean) after projecting out the top
    ``subspace_dim`` eigenvectors of the centered support covariance."""
    s = _as_matrix(support)
    q = _as_vector(query, "query")
    if q.shape[0] != s.shape[1]:
        raise DimensionMismatchError(s.shape[1], q.shape[0], "query vector")
    if subspace_dim < 0:
        raise ConfigurationError(f"subspace dimension must be >= 0, got {subspace_dim}")
    mean = s.mean(axis=0)
    centered = s - mean
    cov = centered.T @ centered
    values, vectors = np.linalg.eigh(cov)
    values = values[::-1]
    vectors = vectors[:, ::-1]
    top = float(values[0]) if values.size else 0.0
    rank = int(np.sum(values > 1e-10 * max(top, 1.0)))
    if subspace_dim > rank:
        raise ConfigurationError(
            f"subspace dimension {subspace_dim} exceeds the centered support rank {rank}"
        )
    rel = q - mean
    if subspace_dim > 0:
        basis = vectors[:, :subspace_dim]
        rel = rel - basis @ (basis.T @ rel)
    return float(rel @ rel)


def class_probabilities(dist_sq, zeta: float) -> np.ndarray:
    """Softmax of -zeta * d^2 over classes, max-subtracted for stability."""
    d = np.asarray(dist_sq, dtype=np.float64)
    if d.ndim != 1 or d.shape[0] < 2:
        raise DataError(f"need distances for at least two classes, got shape {d.shape}")
    if not zeta > 0:
        raise ConfigurationError(f"metric scaling zeta must be positive, got {zeta}")
    if not np.all(np.isfinite(d)):
        raise NumericalError("class distances must all be finite")
    logits = -float(zeta) * d
    logits -= logits.max()
    weights = np.exp(logits)
    return weights / weights.sum()


def episode_loss(probs, labels) -> float:
    """Mean negative log probability of the true class across queries."""
    p = np.asarray(probs, dtype=np.float64)
    y = np.asarray(labels)
    if p.ndim != 2 or p.shape[0] < 1:
        raise DataError(f"need an (m, C) probability array with m >= 1, got shape {p.shape}")
    if y.shape != (p.shape[0],) or not np.issubdtype(y.dtype, np.integer):
        raise DataError("labels must be one integer class index per query")
    if np.any(y < 0) or np.any(y >= p.shape[1]):
        raise DataError(f"labels must lie in [0, {p.shape[1]}), got range [{y.min()}, {y.max()}]")
    true_p = p[np.arange(p.shape[0]), y]
    if np.any(true_p <= 0.0):
        raise NumericalError("true-class probability is exactly zero; cannot take its log")
    return float(-np.mean(np.log(true_p)))


def classify_episode(episode, kernel: KernelSpec, filter_spec: FilterSpec,
                     zeta: float = 1.0) -> EpisodeResult:
    """Classify every query of an episode against its support classes.

    Per class the Gram matrix, centering, eigendecomposition, resolved
    shrinkage parameter, and filter matrix are computed once and reused
    across queries; per query only the kernel row, centered cross vector,
    query norm, shrinkage coefficients, and distance remain.  Errors are
    re-raised with class/query context attached.
    """
    spec = resolve_kernel(kernel, episode.dim)
    m = episode.query_features.shape[0]
    dists = np.empty((m, episode.way))
    for c in range(episode.way):
        support = episode.support[c]
        try:
            k_ss = gram_support(spec, support)
            ktilde = center_support(k_ss)
            eigensystem = symmetric_eig(ktilde)
            lam = resolve_lambda(filter_spec.lambda_policy, eigensystem)
            g = filter_matrix(eigensystem, filter_spec, lam)
        except ProtofilterError as exc:
            raise _with_context(exc, f"class {c} ({episode.class_labels[c]})")
        for l in range(m):
            try:
                kappa, k_qq = gram_query(spec, support, episode.query_features[l])
                b = center_cross(k_ss, kappa)
                q_norm = centered_query_norm(k_ss, kappa, k_qq)
                coeffs = shrinkage_coefficients(g, b)
                dists[l, c] = distance_sq(coeffs, ktilde, b, q_norm)
            except ProtofilterError as exc:
                raise _with_context(exc, f"class {c} ({episode.class_labels[c]}), query {l}")
    probs = np.empty_like(dists)
    for l in range(m):
        try:
            probs[l] = class_probabilities(dists[l], zeta)
        except ProtofilterError as exc:
            raise _with_context(exc, f"query {l}")
    predicted = dists.argmin(axis=1)
    loss = episode_loss(probs, episode.query_labels)
    return EpisodeResult(dists, probs, predicted, loss)


def replicated_matrix_distance(support, query, kernel: KernelSpec,
                               filter_spec: FilterSpec, lam: float) -> float:
    """Distance computed through the full replicated-matrix form.

    Spells out the n x n constant-column query/support block, the
    constant query/query block, and the 1/n averaging matrix, centers
    them by full matrix products, and filters through numpy's symmetric
    eigensolver.  Valid for any kernel; the second independent reference
    path for :func:`distance_sq`.
    """
    s = _as_matrix(support)
    q = _as_vector(query, "query")
    spec = resolve_kernel(kernel, s.shape[1])
    n = s.shape[0]
    k_ss = np.array([[kernel_eval(spec, s[i], s[j]) for j in range(n)] for i in range(n)])
    kappa = np.array([kernel_eval(spec, s[i], q) for i in range(n)])
    k_qs = np.tile(kappa[:, None], (1, n))
    k_qq = np.full((n, n), kernel_eval(spec, q, q))
    averager = np.full((n, n), 1.0 / n)
    weights_vec = np.full(n, 1.0 / n)
    kt_ss = k_ss - averager @ k_ss - k_ss @ averager + averager @ k_ss @ averager
    kt_qs = k_qs - averager @ k_qs - k_ss + averager @ k_ss
    kt_qq = k_qq + k_ss - k_qs - k_qs.T
    cross = kt_qs @ weights_vec
    q_norm = float(weights_vec @ kt_qq @ weights_vec)
    values, vectors = np.linalg.eigh(0.5 * (kt_ss + kt_ss.T))
    values = np.where(values < EIGENVALUE_CLAMP, 0.0, values)
    h = np.array([filter_weight(filter_spec, float(v), lam) for v in values])
    g = (vectors * h) @ vectors.T
    a = g @ cross
    return float(a @ kt_ss @ a + q_norm - 2.0 * (a @ cross))

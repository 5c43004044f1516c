"""Shared numerical kernels: softmax, entropy, cosine, Cholesky solves.

All routines operate on float64 and validate their inputs at the boundary.
Entropy is measured in nats throughout the package.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import solve_triangular

from .exceptions import (
    DegenerateDisplacementError,
    DimensionMismatchError,
    InvalidInputError,
    NumericalError,
)
from .validation import as_matrix, as_vector, check_distribution

_NORM_FLOOR = 1e-12


def softmax(logits) -> np.ndarray:
    """Numerically stable softmax of a logit vector.

    The maximum logit is subtracted before exponentiation, so arbitrarily
    large magnitudes cannot overflow.
    """
    z = as_vector(logits, "logits")
    z = z - z.max()
    e = np.exp(z)
    return e / e.sum()


def softmax_rows(logits) -> np.ndarray:
    """Row-wise softmax of a logit matrix."""
    z = as_matrix(logits, "logits")
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def shannon_entropy(p) -> float:
    """Shannon entropy of a probability vector, in nats.

    Zero entries contribute zero (the 0*log(0) = 0 convention). The result
    is clipped into [0, ln(len(p))] to absorb float round-off at the
    boundary cases.
    """
    q = check_distribution(p, "p")
    nz = q[q > 0.0]
    h = float(-(nz * np.log(nz)).sum())
    return float(np.clip(h, 0.0, np.log(q.shape[0]) if q.shape[0] > 1 else 0.0))


def cosine_similarity(u, v) -> float:
    """Cosine similarity of two equal-length vectors, clipped into [-1, 1].

    Raises DegenerateDisplacementError when either norm is at or below
    1e-12; the caller decides how degenerate displacements are handled.
    """
    a = as_vector(u, "u")
    b = as_vector(v, "v", dim=a.shape[0])
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na <= _NORM_FLOOR or nb <= _NORM_FLOOR:
        raise DegenerateDisplacementError(
            f"cosine undefined for near-zero norms ({na:.3e}, {nb:.3e})"
        )
    return float(np.clip(float(a @ b) / (na * nb), -1.0, 1.0))


def _check_square_symmetric(A) -> np.ndarray:
    M = np.asarray(A, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionMismatchError(f"matrix must be square, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise InvalidInputError("matrix contains non-finite entries")
    scale = max(1.0, float(np.abs(M).max()))
    if float(np.abs(M - M.T).max()) > 1e-10 * scale:
        raise InvalidInputError("matrix is not symmetric within 1e-10")
    return M


def cholesky_factor(A) -> np.ndarray:
    """Lower-triangular Cholesky factor of a symmetric positive-definite matrix.

    Left-looking column factorization; a non-positive pivot raises
    NumericalError carrying the failing pivot index.
    """
    M = _check_square_symmetric(A)
    n = M.shape[0]
    L = np.zeros_like(M)
    for j in range(n):
        d = M[j, j] - L[j, :j] @ L[j, :j]
        if not np.isfinite(d) or d <= 0.0:
            raise NumericalError(
                f"matrix is not positive definite at pivot {j}", pivot_index=j
            )
        L[j, j] = np.sqrt(d)
        if j + 1 < n:
            L[j + 1 :, j] = (M[j + 1 :, j] - L[j + 1 :, :j] @ L[j, :j]) / L[j, j]
    return L


def cholesky_solve(A, b) -> np.ndarray:
    """Solve ``A x = b`` for symmetric positive-definite ``A``.

    Factorizes once and applies two triangular solves. ``b`` may be a
    vector or a matrix of right-hand sides.
    """
    L = cholesky_factor(A)
    rhs = np.asarray(b, dtype=np.float64)
    if rhs.shape[0] != L.shape[0]:
        raise DimensionMismatchError(
            f"right-hand side has leading dimension {rhs.shape[0]}, "
            f"expected {L.shape[0]}"
        )
    if not np.all(np.isfinite(rhs)):
        raise InvalidInputError("right-hand side contains non-finite entries")
    y = solve_triangular(L, rhs, lower=True)
    return solve_triangular(L.T, y, lower=False)


def solve_with_factor(L, b) -> np.ndarray:
    """Solve ``L L^T x = b`` given an existing lower Cholesky factor."""
    y = solve_triangular(L, b, lower=True)
    return solve_triangular(L.T, y, lower=False)


def gaussian_vector(rng, dim: int, sigma: float) -> np.ndarray:
    """Isotropic Gaussian draw: dim i.i.d. N(0, sigma^2) entries.

    sigma = 0 yields the zero vector without consuming randomness quality
    (the draws still advance the stream so call order stays stable).
    """
    if dim < 1:
        raise InvalidInputError("dim must be >= 1")
    if not np.isfinite(sigma) or sigma < 0:
        raise InvalidInputError(f"sigma must be non-negative and finite, got {sigma!r}")
    return sigma * rng.normal(dim)

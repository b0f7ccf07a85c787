"""Dense linear algebra kernels used by the samplers.

Matrices are plain 2-D float64 numpy arrays in C (row-major) order; models in
this package top out at a few hundred rows/columns, so dense storage is the
right default.  All functions validate shapes, refuse non-finite output, and
raise ValueError instead of silently broadcasting.
"""

from __future__ import annotations

import numpy as np

_SYM_TOL = 1e-8


def as_matrix(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got ndim={a.ndim}")
    return a


def check_finite(a: np.ndarray, what: str = "matrix") -> np.ndarray:
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{what} contains NaN or Inf")
    return a


def _check_symmetric(a: np.ndarray) -> np.ndarray:
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"matrix is not square: {a.shape}")
    scale = max(1.0, float(np.max(np.abs(a))) if a.size else 1.0)
    if a.size and float(np.max(np.abs(a - a.T))) > _SYM_TOL * scale:
        raise ValueError("matrix is not symmetric")
    return a


def mat_mul(a, b) -> np.ndarray:
    """Matrix product with explicit conformance checking."""
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"dimension mismatch: {a.shape} @ {b.shape}")
    return check_finite(a @ b, "matrix product")


def cholesky_lower(a, tol: float = 1e-12) -> np.ndarray:
    """Lower-triangular L with L L^T = a.

    Fails explicitly (ValueError) when a pivot falls at or below ``tol``,
    i.e. the input is not positive definite to working precision.
    """
    a = _check_symmetric(a)
    n = a.shape[0]
    lower = np.zeros((n, n), dtype=float)
    for j in range(n):
        d = a[j, j] - lower[j, :j] @ lower[j, :j]
        if d <= tol:
            raise ValueError(
                f"matrix is not positive definite (pivot {d:.3e} at column {j})"
            )
        lower[j, j] = np.sqrt(d)
        if j + 1 < n:
            lower[j + 1 :, j] = (a[j + 1 :, j] - lower[j + 1 :, :j] @ lower[j, :j]) / lower[j, j]
    return lower


def min_eigenvalue_sym(a) -> float:
    """Smallest eigenvalue of a symmetric matrix (LAPACK symmetric solver)."""
    a = _check_symmetric(a)
    # eigvalsh reads one triangle; average away round-off asymmetry first
    vals = np.linalg.eigvalsh(0.5 * (a + a.T))
    return float(vals[0])


def quantile(samples, p: float) -> float:
    """Linear-interpolation quantile: order statistic k sits at (k-1)/(m-1)."""
    samples = np.asarray(samples, dtype=float).ravel()
    if samples.size == 0:
        raise ValueError("quantile of an empty sample list")
    if not 0.0 <= p <= 1.0:
        raise ValueError("quantile level must lie in [0, 1]")
    return float(np.quantile(samples, p, method="linear"))


def rel_frobenius(a: np.ndarray, ref: np.ndarray) -> float:
    """Frobenius norm of (a - ref) relative to ref (absolute if ref is zero)."""
    diff = float(np.linalg.norm(a - ref))
    denom = float(np.linalg.norm(ref))
    return diff / denom if denom > 0.0 else diff

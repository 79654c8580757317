"""Dense vector and small symmetric-matrix kernels.

All public functions are pure: they never mutate their inputs and are safe
to call concurrently. Vectors are 1-d float64 arrays; matrices are square
float64 arrays. Inputs containing NaN/Inf are rejected.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "project_ball",
    "clip_euclid",
    "clip_coord",
    "jacobi_eigh",
    "inv_sqrt_psd",
]

# Norms within a few ulps of the boundary count as inside, so that clipping
# and projection are exactly idempotent in floating point.
_BOUNDARY_SLACK = 1.0 + 4e-16

_SYMMETRY_TOL = 1e-12
_EIG_NEG_SLACK = -1e-10


def _as_vector(x) -> np.ndarray:
    v = np.asarray(x, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise ValueError(f"expected a non-empty 1-d vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("non-finite entries in vector")
    return v


def project_ball(x, radius: float) -> np.ndarray:
    """Euclidean projection onto the origin-centered ball of the given radius."""
    if not np.isfinite(radius) or radius < 0:
        raise ValueError(f"radius must be finite and >= 0, got {radius}")
    v = _as_vector(x)
    if radius == 0.0:
        return np.zeros_like(v)
    n = float(np.linalg.norm(v))
    if n <= radius * _BOUNDARY_SLACK:
        return v
    # (v / n) * radius keeps boundary hits exact: a 1-d vector lands on
    # +/- radius bitwise, which downstream sign-pattern checks rely on.
    return (v / n) * radius


def clip_euclid(x) -> np.ndarray:
    """Rescale x to the unit Euclidean ball: x * min(1, 1/||x||), with 0 -> 0."""
    v = _as_vector(x)
    n = float(np.linalg.norm(v))
    if n <= _BOUNDARY_SLACK:
        return v
    return v / n


def clip_coord(x) -> np.ndarray:
    """Clamp every coordinate of x to [-1, 1]."""
    v = _as_vector(x)
    return np.clip(v, -1.0, 1.0)


def _as_symmetric(S) -> np.ndarray:
    A = np.asarray(S, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] == 0:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("non-finite entries in matrix")
    if np.max(np.abs(A - A.T)) > _SYMMETRY_TOL:
        raise ValueError("matrix is not symmetric to within 1e-12")
    return A


def jacobi_eigh(S, max_sweeps: int = 60) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a symmetric matrix via cyclic Jacobi sweeps.

    Returns (w, Q) with eigenvalues w ascending and S = Q @ diag(w) @ Q.T.
    Deterministic for a given input; intended for modest sizes (d <= 64-ish).
    Raises if the off-diagonal mass has not converged after max_sweeps.
    """
    A = _as_symmetric(S).copy()
    d = A.shape[0]
    Q = np.eye(d)
    if d == 1:
        return A.diagonal().copy(), Q

    scale = float(np.linalg.norm(A)) or 1.0
    for _ in range(max_sweeps):
        od = A - np.diag(A.diagonal())
        off = float(np.linalg.norm(od))
        if off <= 1e-14 * scale:
            break
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = A[p, q]
                if abs(apq) <= 1e-18 * scale:
                    continue
                # Stable rotation angle (Golub & Van Loan style).
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.hypot(1.0, theta))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.hypot(1.0, t)
                s = t * c
                rot_p = c * A[:, p] - s * A[:, q]
                rot_q = s * A[:, p] + c * A[:, q]
                A[:, p], A[:, q] = rot_p, rot_q
                rot_p = c * A[p, :] - s * A[q, :]
                rot_q = s * A[p, :] + c * A[q, :]
                A[p, :], A[q, :] = rot_p, rot_q
                A[p, q] = A[q, p] = 0.0
                rot_p = c * Q[:, p] - s * Q[:, q]
                rot_q = s * Q[:, p] + c * Q[:, q]
                Q[:, p], Q[:, q] = rot_p, rot_q
    else:
        raise RuntimeError(f"Jacobi iteration did not converge in {max_sweeps} sweeps")

    w = A.diagonal().copy()
    order = np.argsort(w, kind="stable")
    return w[order], Q[:, order]


def inv_sqrt_psd(S, floor: float = 1e-12) -> np.ndarray:
    """Inverse matrix square root of a PSD matrix with eigenvalue flooring.

    Eigenvalues below `floor` are raised to it before inverting, so the
    result is always symmetric positive definite. Eigenvalues below the
    -1e-10 numerical slack are rejected as genuinely indefinite input.
    """
    if not (floor > 0):
        raise ValueError(f"floor must be positive, got {floor}")
    w, Q = jacobi_eigh(S)
    if w[0] < _EIG_NEG_SLACK:
        raise ValueError(f"matrix has negative eigenvalue {w[0]:.3e}")
    w = np.maximum(w, floor)
    B = (Q * w**-0.5) @ Q.T
    return 0.5 * (B + B.T)

"""Dense real-matrix kernel for the solver and analysis code.

Everything here operates on plain float64 numpy arrays. The systems are
tiny (normal equations of at most 2N+2 unknowns, stacked models of at most
a few dozen rows), so the emphasis is on strict validation and error
reporting rather than throughput.
"""

from __future__ import annotations

import numpy as np

# A Cholesky pivot d_jj below this fraction of the largest diagonal entry
# of the input declares the matrix numerically singular.
SINGULARITY_RTOL = 1e-12


class DimensionMismatch(ValueError):
    """Operands do not conform."""


class SingularMatrix(ValueError):
    """Matrix is numerically singular (non-positive Cholesky pivot)."""


def _as_matrix(a, name: str = "matrix") -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-D, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite entries")
    return a


def mat_mul(a, b) -> np.ndarray:
    """Matrix product a @ b with explicit conformance checking."""
    a = _as_matrix(a, "a")
    b = _as_matrix(b, "b")
    if a.shape[1] != b.shape[0]:
        raise DimensionMismatch(
            f"cannot multiply {a.shape[0]}x{a.shape[1]} by {b.shape[0]}x{b.shape[1]}"
        )
    return a @ b


def _cholesky(a: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor, raising SingularMatrix on non-positive pivots."""
    try:
        low = np.linalg.cholesky(a)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrix(str(exc)) from None
    # numpy may succeed on barely positive matrices; enforce the pivot floor.
    max_diag = float(np.max(np.diag(a))) if a.size else 0.0
    if max_diag <= 0.0 or np.min(np.diag(low)) ** 2 <= SINGULARITY_RTOL * max_diag:
        raise SingularMatrix("pivot below singularity tolerance")
    return low


def solve_spd(a, b) -> np.ndarray:
    """Solve a @ x = b for symmetric positive-definite a.

    b may be a vector or a matrix of right-hand sides. Raises
    SingularMatrix when the factorization encounters a non-positive pivot.
    """
    a = _as_matrix(a, "a")
    b = np.asarray(b, dtype=float)
    n = a.shape[0]
    if a.shape[1] != n:
        raise DimensionMismatch(f"a must be square, got shape {a.shape}")
    if b.shape[0] != n:
        raise DimensionMismatch(f"rhs has {b.shape[0]} rows, expected {n}")
    low = _cholesky(a)
    from scipy.linalg import solve_triangular

    y = solve_triangular(low, b, lower=True, check_finite=False)
    return solve_triangular(low, y, trans="T", lower=True, check_finite=False)


def invert_spd(a) -> np.ndarray:
    """Inverse of a symmetric positive-definite matrix via solve_spd."""
    a = _as_matrix(a, "a")
    inv = solve_spd(a, np.eye(a.shape[0]))
    # symmetrize to kill factorization round-off
    return 0.5 * (inv + inv.T)


def is_positive_semidefinite(a, tol: float = 1e-12, scale: float | None = None) -> bool:
    """True iff the symmetrized input has smallest eigenvalue >= -tol * scale.

    ``scale`` defaults to the largest eigenvalue magnitude of the input.
    Pass it explicitly when the input is a difference of much larger
    matrices, whose cancellation round-off lives at the scale of the
    operands rather than of the result.
    """
    a = _as_matrix(a, "a")
    if a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"a must be square, got shape {a.shape}")
    sym = 0.5 * (a + a.T)
    eigs = np.linalg.eigvalsh(sym)
    if eigs.size == 0:
        return True
    if scale is None:
        scale = float(np.max(np.abs(eigs)))
    return bool(eigs[0] >= -tol * scale)

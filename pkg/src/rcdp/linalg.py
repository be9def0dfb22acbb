"""Dense SPD matrix primitives with exact rank-one inverse maintenance.

All design matrices in the package are regularized Gram matrices of the form
``lam * I + sum_s c_s v_s v_s^T`` with ``c_s >= 0``, so they stay symmetric
positive definite.  The inverse is maintained incrementally (Sherman-Morrison)
and re-synchronized by a direct solve every ``RESYNC_EVERY`` updates to bound
floating-point drift.
"""

from __future__ import annotations

import numpy as np

RESYNC_EVERY = 500

# Denominators below this are treated as numerically singular.
SINGULAR_TOL = 1e-12


class DimensionMismatchError(ValueError):
    pass


class SingularUpdateError(ArithmeticError):
    pass


def _check_vector(v: np.ndarray, dim: int) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (dim,):
        raise DimensionMismatchError(f"expected vector of length {dim}, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("non-finite entries in vector")
    return v


class SpdMatrix:
    """Symmetric positive definite matrix with a maintained inverse.

    Initialized to ``lam * I``; grows only through :meth:`rank1_update`.
    """

    def __init__(self, dim: int, lam: float = 1.0):
        if dim < 1:
            raise ValueError("dim must be >= 1")
        if lam <= 0:
            raise ValueError("regularizer must be positive")
        self.dim = dim
        self.mat = lam * np.eye(dim)
        self.inv = (1.0 / lam) * np.eye(dim)
        self._updates_since_sync = 0

    def copy(self) -> "SpdMatrix":
        out = SpdMatrix.__new__(SpdMatrix)
        out.dim = self.dim
        out.mat = self.mat.copy()
        out.inv = self.inv.copy()
        out._updates_since_sync = self._updates_since_sync
        return out

    def rank1_update(self, v: np.ndarray, c: float) -> None:
        """Add ``c * v v^T`` and update the inverse via Sherman-Morrison."""
        v = _check_vector(v, self.dim)
        if not np.isfinite(c) or c < 0:
            raise ValueError(f"rank-1 coefficient must be a finite nonnegative real, got {c}")
        if c == 0.0:
            return
        iv = self.inv @ v
        denom = 1.0 + c * float(v @ iv)
        if denom <= SINGULAR_TOL:
            raise SingularUpdateError(f"rank-1 update denominator {denom} is numerically singular")
        self.mat += c * np.outer(v, v)
        self.inv -= (c / denom) * np.outer(iv, iv)
        # keep both factors exactly symmetric
        self.mat = 0.5 * (self.mat + self.mat.T)
        self.inv = 0.5 * (self.inv + self.inv.T)
        self._updates_since_sync += 1
        if self._updates_since_sync >= RESYNC_EVERY:
            self.resync()

    def resync(self) -> None:
        """Recompute the inverse directly to clear accumulated drift."""
        inv = np.linalg.inv(self.mat)
        self.inv = 0.5 * (inv + inv.T)
        self._updates_since_sync = 0

    def mahalanobis_inv(self, v: np.ndarray) -> float:
        """``sqrt(v^T M^{-1} v)``, the norm used for leverage and bonuses."""
        v = _check_vector(v, self.dim)
        q = float(v @ self.inv @ v)
        return float(np.sqrt(max(q, 0.0)))

    def mahalanobis_inv_rows(self, rows: np.ndarray) -> np.ndarray:
        """Row-wise ``sqrt(r M^{-1} r^T)`` for a stack of vectors."""
        rows = np.asarray(rows, dtype=float)
        if rows.ndim != 2 or rows.shape[1] != self.dim:
            raise DimensionMismatchError(f"expected rows of width {self.dim}, got {rows.shape}")
        q = np.einsum("ij,jk,ik->i", rows, self.inv, rows)
        return np.sqrt(np.maximum(q, 0.0))

    def inverse_drift(self) -> float:
        """Max-norm of ``mat @ inv - I`` (diagnostic)."""
        return float(np.max(np.abs(self.mat @ self.inv - np.eye(self.dim))))

    def min_eig(self) -> float:
        return float(np.linalg.eigvalsh(self.mat)[0])


def direct_inverse(m: np.ndarray) -> np.ndarray:
    """Plain Gaussian-elimination inverse, used as an oracle in tests."""
    m = np.asarray(m, dtype=float)
    n = m.shape[0]
    aug = np.hstack([m.copy(), np.eye(n)])
    for col in range(n):
        pivot = col + int(np.argmax(np.abs(aug[col:, col])))
        if abs(aug[pivot, col]) < 1e-300:
            raise np.linalg.LinAlgError("singular matrix")
        if pivot != col:
            aug[[col, pivot]] = aug[[pivot, col]]
        aug[col] /= aug[col, col]
        for row in range(n):
            if row != col:
                aug[row] -= aug[row, col] * aug[col]
    return aug[:, n:]

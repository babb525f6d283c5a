"""Small dense symmetric linear algebra.

Everything here targets tiny dimensions (d <= 16): rank-1 inverse
maintenance, projection onto a box in the norm induced by a positive
definite matrix, and a Jacobi eigenvalue routine.
"""

from __future__ import annotations

import math

import numpy as np

from ._validation import as_square, as_vector, check_scalar, check_symmetric
from .core import FeasibleRegion

__all__ = ["PsdTracker", "generalized_projection", "min_eigenvalue", "symmetric_eigenvalues"]

DRIFT_TOL = 1e-8


class PsdTracker:
    """Symmetric positive definite ``A`` together with its inverse.

    The inverse follows ``A`` through Sherman-Morrison for rank-1 updates and
    through exact re-inversion for ``A += c I``.  After every update the drift
    ``max|A A_inv - I|`` is checked and the inverse is recomputed when it
    exceeds ``DRIFT_TOL``.
    """

    def __init__(self, A):
        A = check_symmetric(A, tol=1e-12, name="A")
        A = 0.5 * (A + A.T)
        self.A = A
        self.A_inv = np.linalg.inv(A)
        self.refreshes = 0

    @classmethod
    def scaled_identity(cls, dim: int, scale: float) -> "PsdTracker":
        scale = check_scalar(scale, "scale", low=0.0, strict=True)
        tracker = cls.__new__(cls)
        tracker.A = scale * np.eye(dim)
        tracker.A_inv = np.eye(dim) / scale
        tracker.refreshes = 0
        return tracker

    @property
    def dim(self) -> int:
        return self.A.shape[0]

    def copy(self) -> "PsdTracker":
        other = PsdTracker.__new__(PsdTracker)
        other.A = self.A.copy()
        other.A_inv = self.A_inv.copy()
        other.refreshes = self.refreshes
        return other

    def drift(self) -> float:
        return float(np.max(np.abs(self.A @ self.A_inv - np.eye(self.dim))))

    def refresh(self) -> None:
        self.A_inv = np.linalg.inv(self.A)
        self.A_inv = 0.5 * (self.A_inv + self.A_inv.T)
        self.refreshes += 1

    def rank_one_update(self, v, c: float = 1.0) -> "PsdTracker":
        """``A += c v v^T`` with the matching Sherman-Morrison inverse update."""
        if c < 0.0:
            raise ValueError("rank-1 coefficient must be non-negative")
        if c == 0.0:
            return self
        v = np.asarray(v, dtype=np.float64)
        Av = self.A_inv @ v
        denom = 1.0 + c * float(v @ Av)
        if not denom > 0.0:
            raise ArithmeticError(f"Sherman-Morrison denominator {denom} <= 0")
        self.A += c * np.outer(v, v)
        self.A_inv -= (c / denom) * np.outer(Av, Av)
        self._check_drift()
        return self

    def scaled_identity_update(self, c: float) -> "PsdTracker":
        """``A += c I`` followed by exact re-inversion."""
        if c < 0.0:
            raise ValueError("identity coefficient must be non-negative")
        if c == 0.0:
            return self
        self.A[np.diag_indices_from(self.A)] += c
        if np.count_nonzero(self.A - np.diag(np.diagonal(self.A))) == 0:
            self.A_inv = np.diag(1.0 / np.diagonal(self.A))
        else:
            self.A_inv = np.linalg.inv(self.A)
            self.A_inv = 0.5 * (self.A_inv + self.A_inv.T)
        return self

    def _check_drift(self) -> None:
        if self.dim == 1:
            # scalar case: keep the inverse exact
            self.A_inv[0, 0] = 1.0 / self.A[0, 0]
            return
        if self.drift() > DRIFT_TOL:
            self.refresh()

    def __repr__(self):
        return f"PsdTracker(dim={self.dim})"


def _is_diagonal(A: np.ndarray) -> bool:
    return A.shape[0] == 1 or not np.any(A - np.diag(np.diagonal(A)))


def _quad(A, x, y):
    r = x - y
    return float(r @ A @ r)


def generalized_projection(A, y, region: FeasibleRegion, *, tol: float = 1e-10, max_iter: int = 100) -> np.ndarray:
    """Minimizer of ``(y - x)^T A (y - x)`` over the box ``region``.

    ``A`` is a symmetric positive definite matrix or a :class:`PsdTracker`.
    Points already inside the box are returned unchanged.  Diagonal ``A``
    reduces to coordinate clamping; otherwise a projected Newton iteration
    with an epsilon-active set is run until the normalized KKT residual is
    below ``tol``.
    """
    y = as_vector(y, dim=region.dim, name="y")
    lo, hi = region.lower, region.upper
    if ((y >= lo) & (y <= hi)).all():
        return y.copy()
    A = A.A if isinstance(A, PsdTracker) else as_square(A, name="A")
    x = np.minimum(np.maximum(y, lo), hi)
    if _is_diagonal(A):
        return x

    scale = float(np.max(np.abs(A)))
    for _ in range(max_iter):
        g = (A @ (x - y)) / scale
        residual = x - np.minimum(np.maximum(x - g, lo), hi)
        res_norm = float(np.max(np.abs(residual)))
        if res_norm <= tol:
            break
        eps = min(1e-8, res_norm)
        binding = ((x <= lo + eps) & (g > 0.0)) | ((x >= hi - eps) & (g < 0.0))
        free = ~binding
        if not np.any(free):
            break
        step = np.zeros_like(x)
        Aff = A[np.ix_(free, free)] / scale
        step[free] = np.linalg.solve(Aff, -g[free])
        q0 = _quad(A, x, y)
        t = 1.0
        while True:
            cand = np.minimum(np.maximum(x + t * step, lo), hi)
            # Armijo condition along the projection arc
            if _quad(A, cand, y) <= q0 + 1e-4 * scale * float(g @ (cand - x)) or t < 1e-12:
                break
            t *= 0.5
        if np.array_equal(cand, x):
            break
        x = cand
    return x


def _jacobi_eigenvalues(M: np.ndarray, max_sweeps: int = 100) -> np.ndarray:
    a = M.copy()
    n = a.shape[0]
    if n == 1:
        return np.array([a[0, 0]])
    fro = float(np.linalg.norm(a))
    if fro == 0.0:
        return np.zeros(n)
    for _ in range(max_sweeps):
        off = math.sqrt(2.0 * float(np.sum(np.triu(a, 1) ** 2)))
        if off <= 1e-15 * fro:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                rp = a[p, :].copy()
                rq = a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                cp = a[:, p].copy()
                cq = a[:, q].copy()
                a[:, p] = c * cp - s * cq
                a[:, q] = s * cp + c * cq
                a[p, q] = a[q, p] = 0.0
    return np.sort(np.diagonal(a))


def symmetric_eigenvalues(M) -> np.ndarray:
    """Ascending eigenvalues of a symmetric matrix (cyclic Jacobi rotations)."""
    M = check_symmetric(M, tol=1e-12, name="M")
    return _jacobi_eigenvalues(0.5 * (M + M.T))


def min_eigenvalue(M) -> float:
    return float(symmetric_eigenvalues(M)[0])

"""Minimal dense linear-algebra contract.

Everything the solver needs from a numerical kernel provider: a
generalized eigendecomposition (with optional left vectors), the
smallest singular value, and a linear solve.  Backed by LAPACK via
scipy; conforming replacements only need to meet the residual
certificates, not bit-exactness.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

__all__ = ["BackendError", "GeneralizedEig", "generalized_eig", "svd_smallest", "solve", "REENTRANT"]

#: LAPACK drivers used here are reentrant; sweeps may call concurrently.
REENTRANT = True


class BackendError(RuntimeError):
    """Eigensolver or factorization failure."""


@dataclass(frozen=True)
class GeneralizedEig:
    """Result of a generalized eigendecomposition A v = lam B v.

    `eigenvalues` holds np.inf (times sign ambiguity removed: stored as
    complex inf) where beta == 0; `finite` masks the finite pairs.
    """

    eigenvalues: np.ndarray
    right: np.ndarray
    left: np.ndarray | None

    @property
    def finite(self) -> np.ndarray:
        return np.isfinite(self.eigenvalues)


def generalized_eig(A: np.ndarray, B: np.ndarray, want_left: bool = False) -> GeneralizedEig:
    """Dense generalized eigendecomposition of (A, B).

    Right vectors satisfy A v = lam B v; left vectors w satisfy
    w^H A = lam w^H B.  Infinite eigenvalues (beta == 0) are reported
    as complex infinity.
    """
    A = np.asarray(A)
    B = np.asarray(B)
    if A.shape != B.shape or A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("A and B must be square matrices of equal size")
    try:
        if want_left:
            w, vl, vr = scipy.linalg.eig(A, B, left=True, right=True)
        else:
            vl = None
            w, vr = scipy.linalg.eig(A, B, left=False, right=True)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - rare QZ failure
        raise BackendError(
            f"generalized eigensolver failed on {A.shape[0]}x{A.shape[0]} pair: {exc}"
        ) from exc
    return GeneralizedEig(eigenvalues=w, right=vr, left=vl)


def svd_smallest(A: np.ndarray) -> float:
    """Smallest singular value of A."""
    s = scipy.linalg.svdvals(np.asarray(A))
    return float(s[-1]) if len(s) else 0.0


def solve(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve A x = b (dense LU)."""
    try:
        return scipy.linalg.solve(np.asarray(A), np.asarray(b))
    except scipy.linalg.LinAlgError as exc:
        raise BackendError(f"linear solve failed: {exc}") from exc

"""Dense complex linear algebra kernels.

LU, eigen and SVD kernels delegate to LAPACK through scipy; this module
pins down the contracts the rest of the package relies on (pivot
threshold, unit eigenvectors, infinite-eigenvalue marker, rank-revealing
Gram-Schmidt).
"""
from dataclasses import dataclass

import warnings

import numpy as np
import scipy.linalg as sla

from .errors import ConvergenceFailure, DimensionCap, DimensionMismatch, SingularMatrix

DENSE_CAP = 4096
EIG_TOL = 1e-10


def as_cmatrix(A, name="matrix"):
    """Return ``A`` as a finite 2-d complex array."""
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-d, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} has non-finite entries")
    return A


def as_cvector(x, name="vector"):
    x = np.asarray(x, dtype=complex)
    if x.ndim != 1:
        raise DimensionMismatch(f"{name} must be 1-d, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} has non-finite entries")
    return x


def _square(A, name="matrix"):
    A = as_cmatrix(A, name)
    if A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {A.shape}")
    return A


@dataclass(frozen=True)
class LUFactorization:
    lu: np.ndarray
    piv: np.ndarray

    @property
    def n(self):
        return self.lu.shape[0]

    def solve(self, b, trans=0):
        return lu_solve(self, b, trans=trans)


def _getrf(A):
    # singular pivots are reported by the callers, not by scipy
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        return sla.lu_factor(A, check_finite=False)


def lu_factor(A, pivot_tol=1e-14):
    """LU factorization with partial pivoting.

    Raises `SingularMatrix` when some pivot is below
    ``pivot_tol * max|A_ij|``.
    """
    A = _square(A)
    scale = np.max(np.abs(A)) if A.size else 0.0
    if scale == 0.0:
        raise SingularMatrix("zero matrix")
    lu, piv = _getrf(A)
    pivots = np.abs(np.diag(lu))
    if np.min(pivots) <= pivot_tol * scale:
        k = int(np.argmin(pivots))
        raise SingularMatrix(f"pivot {k} has magnitude {pivots[k]:.3e} (scale {scale:.3e})")
    return LUFactorization(lu, piv)


def lu_solve(fac, b, trans=0):
    """Solve with a factorization; ``trans=2`` solves with the conjugate transpose."""
    b = np.asarray(b, dtype=complex)
    return sla.lu_solve((fac.lu, fac.piv), b, trans=trans, check_finite=False)


def solve(A, b):
    return lu_solve(lu_factor(A), b)


def _unit_columns(V):
    nrm = np.linalg.norm(V, axis=0)
    nrm[nrm == 0] = 1.0
    return V / nrm


def dense_eig(A, cap=DENSE_CAP):
    """Eigenvalues and unit right eigenvectors of a square matrix."""
    A = _square(A)
    if A.shape[0] > cap:
        raise DimensionCap(f"dimension {A.shape[0]} exceeds dense cap {cap}")
    try:
        w, V = sla.eig(A, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(str(exc)) from exc
    return w, _unit_columns(V)


def dense_geig(A, M, cap=DENSE_CAP):
    """Generalized eigenproblem ``A x = lam M x`` via QZ.

    Infinite eigenvalues (zero ``beta``) are returned as ``complex(inf, 0)``.
    """
    A = _square(A, "A")
    M = _square(M, "M")
    if A.shape != M.shape:
        raise DimensionMismatch(f"A{A.shape} and M{M.shape} differ")
    if A.shape[0] > cap:
        raise DimensionCap(f"dimension {A.shape[0]} exceeds dense cap {cap}")
    try:
        ab, V = sla.eig(A, M, homogeneous_eigvals=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(str(exc)) from exc
    alpha, beta = ab
    # |lam| > 1e14 is treated as infinite
    infinite = np.abs(beta) <= 1e-14 * np.abs(alpha)
    w = np.empty(alpha.shape, dtype=complex)
    w[~infinite] = alpha[~infinite] / beta[~infinite]
    w[infinite] = complex(np.inf, 0.0)
    return w, _unit_columns(V)


def mgs_orthonormalize(W, drop_tol=1e-12):
    """Modified Gram-Schmidt with one re-orthogonalization pass.

    Columns whose norm after projection falls below ``drop_tol`` times
    their initial norm are dropped.

    Returns
    -------
    Q : ndarray
        Orthonormal columns spanning ``W``.
    rank : int
        Number of columns kept.
    """
    W = np.array(W, dtype=complex, copy=True)
    if W.ndim == 1:
        W = W[:, None]
    nrows, ncols = W.shape
    Q = np.empty((nrows, ncols), dtype=complex)
    rank = 0
    for j in range(ncols):
        w = W[:, j]
        norm0 = np.linalg.norm(w)
        if norm0 == 0.0:
            continue
        for _ in range(2):
            for i in range(rank):
                w = w - (Q[:, i].conj() @ w) * Q[:, i]
        nrm = np.linalg.norm(w)
        if nrm < drop_tol * norm0:
            continue
        Q[:, rank] = w / nrm
        rank += 1
    return Q[:, :rank], rank


def spectral_norm(A):
    """Matrix 2-norm (largest singular value)."""
    A = np.asarray(A, dtype=complex)
    if A.size == 0:
        return 0.0
    return float(np.linalg.norm(A, 2))


def svd(A):
    """Thin SVD with nonincreasing singular values."""
    A = as_cmatrix(A)
    try:
        U, s, Vh = sla.svd(A, full_matrices=False, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(str(exc)) from exc
    return U, s, Vh.conj().T


def log_det(A):
    """Determinant of a square matrix as ``(log|det|, arg det)``.

    Uses the LU pivots so that magnitudes far outside double range are
    representable.
    """
    A = _square(A)
    lu, piv = _getrf(A)
    d = np.diag(lu)
    swaps = int(np.sum(piv != np.arange(len(piv))))
    if np.any(d == 0):
        return -np.inf, 0.0
    log_abs = float(np.sum(np.log(np.abs(d))))
    phase = float(np.sum(np.angle(d))) + np.pi * swaps
    return log_abs, wrap_phase(phase)


def wrap_phase(phi):
    return float((phi + np.pi) % (2 * np.pi) - np.pi)

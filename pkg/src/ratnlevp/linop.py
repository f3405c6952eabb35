"""Implicit linearization of a surrogate.

For w = [v_1; ...; v_m; u] the pencil (A, M) acts as

    (A w)_i = s_i v_i - u,      (A w)_u = sum_i B_i v_i + B0 u,
    (M w)_i = v_i,              (M w)_u = A0 u,

and its finite eigenvalues off the poles are those of T~. Nothing of size
(m+1)n x (m+1)n is ever formed here (see `materialize` for tests).
"""
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch
from .linalg import lu_factor, lu_solve


@dataclass
class BlockVector:
    """Block vector with ``v`` of shape (m, n[, k]) and ``u`` of shape (n[, k]).

    A trailing axis of length k holds k block vectors at once.
    """

    v: np.ndarray
    u: np.ndarray

    def __post_init__(self):
        self.v = np.asarray(self.v, dtype=complex)
        self.u = np.asarray(self.u, dtype=complex)
        if self.v.shape[1:] != self.u.shape:
            raise DimensionMismatch(f"top blocks {self.v.shape} do not match bottom {self.u.shape}")

    @property
    def m(self):
        return self.v.shape[0]

    @property
    def n(self):
        return self.u.shape[0]

    def flat(self):
        tail = self.u.shape[1:]
        return np.concatenate([self.v.reshape((-1,) + tail), self.u], axis=0)

    @classmethod
    def from_flat(cls, x, m, n):
        x = np.asarray(x, dtype=complex)
        tail = x.shape[1:]
        return cls(x[: m * n].reshape((m, n) + tail), x[m * n:])

    def norm(self):
        return np.linalg.norm(self.flat(), axis=0)

    def scaled(self, c):
        return BlockVector(self.v * c, self.u * c)

    def copy(self):
        return BlockVector(self.v.copy(), self.u.copy())


def _sum_Bv(s, v):
    if s.m == 0:
        return 0.0
    return s.B_wide @ v.reshape((s.m * s.n,) + v.shape[2:])


def _pole_factors(s, z, ndim):
    return (1.0 / (s.poles - z)).reshape((-1,) + (1,) * (ndim - 1))


def schur_matrix(s, z):
    """S(z) = B0 - z A0 + sum_i B_i/(s_i - z), equal to -T~(z)."""
    z = complex(z)
    s.check_off_poles(z)
    S = s.B0 - z * s.A0
    if s.m:
        S = S + np.tensordot(1.0 / (s.poles - z), s.B, axes=1)
    return S


@dataclass(frozen=True)
class ShiftedFactorization:
    sigma: complex
    schur_lu: object
    pole_gaps: np.ndarray          # s_i - sigma

    def solve(self, b):
        return lu_solve(self.schur_lu, b)


def factor_shifted(s, sigma):
    """Factor S(sigma); the only factorization a shift-invert solve needs."""
    sigma = complex(sigma)
    S = schur_matrix(s, sigma)
    return ShiftedFactorization(sigma, lu_factor(S), s.poles - sigma)


def apply_A(s, w):
    u = w.u
    v = s.poles.reshape((-1,) + (1,) * (w.v.ndim - 1)) * w.v - u[None]
    return BlockVector(v, _sum_Bv(s, w.v) + s.B0 @ u)


def apply_M(s, w):
    return BlockVector(w.v.copy(), s.A0 @ w.u)


def solve_shifted(fac, s, y):
    """Solve (A - sigma M) x = y by block elimination of the top blocks.

    Rows i give (s_i - sigma) x_i - x_u = y_i, so x_i = (y_i + x_u)/(s_i - sigma),
    and the bottom row reduces to S(sigma) x_u = y_u - sum_i B_i y_i/(s_i - sigma).
    """
    d = (1.0 / fac.pole_gaps).reshape((-1,) + (1,) * (y.v.ndim - 1))
    yv = y.v * d
    b = y.u - _sum_Bv(s, yv)
    xu = fac.solve(b)
    return BlockVector(yv + d * xu[None], xu)


def apply_shift_invert(fac, s, w):
    """(A - sigma M)^{-1} M w."""
    return solve_shifted(fac, s, apply_M(s, w))


def lift_eigvec(s, lam, u):
    """Full eigenvector [u/(s_1 - lam); ...; u/(s_m - lam); u] from its bottom block."""
    lam = complex(lam)
    s.check_off_poles(lam)
    u = np.asarray(u, dtype=complex)
    return BlockVector(_pole_factors(s, lam, u.ndim + 1) * u[None], u.copy())


def materialize(s):
    """Dense (A, M) of size (m+1)n; for tests and small dense solves."""
    m, n = s.m, s.n
    N = (m + 1) * n
    A = np.zeros((N, N), dtype=complex)
    M = np.zeros((N, N), dtype=complex)
    I = np.eye(n)
    for i in range(m):
        blk = slice(i * n, (i + 1) * n)
        A[blk, blk] = s.poles[i] * I
        A[blk, m * n:] = -I
        A[m * n:, blk] = s.B[i]
        M[blk, blk] = I
    A[m * n:, m * n:] = s.B0
    M[m * n:, m * n:] = s.A0
    return A, M

"""Split-form nonlinear eigenproblems and their rational surrogates.

A problem is T(z) = -B0 + z A0 + sum_j f_j(z) A_j. Replacing every f_j by a
shared-pole rational approximation r_j gives the surrogate

    T~(z) = -B0 + z A0 + sum_i B_i/(z - s_i),   B_i = sum_j a_ij A_j.
"""
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Tuple

import numpy as np

from .errors import AtPole, DimensionMismatch, EvaluationFailure
from .functions import ScalarFunction, as_scalar_function
from .linalg import as_cmatrix, spectral_norm


@dataclass(frozen=True, eq=False)
class SplitProblem:
    B0: np.ndarray
    A0: np.ndarray
    terms: Tuple[Tuple[np.ndarray, ScalarFunction], ...] = ()
    name: str = ""

    def __post_init__(self):
        B0 = as_cmatrix(self.B0, "B0")
        n = B0.shape[0]
        if B0.shape != (n, n):
            raise DimensionMismatch(f"B0 must be square, got {B0.shape}")
        A0 = as_cmatrix(self.A0, "A0")
        if A0.shape != (n, n):
            raise DimensionMismatch(f"A0 has shape {A0.shape}, expected {(n, n)}")
        terms = []
        for j, (A, f) in enumerate(self.terms):
            A = as_cmatrix(A, f"A{j + 1}")
            if A.shape != (n, n):
                raise DimensionMismatch(f"A{j + 1} has shape {A.shape}, expected {(n, n)}")
            terms.append((A, as_scalar_function(f)))
        object.__setattr__(self, "B0", B0)
        object.__setattr__(self, "A0", A0)
        object.__setattr__(self, "terms", tuple(terms))

    @property
    def n(self):
        return self.B0.shape[0]

    @property
    def p(self):
        return len(self.terms)

    @property
    def matrices(self):
        return [A for A, _ in self.terms]

    @property
    def functions(self):
        return [f for _, f in self.terms]

    @cached_property
    def has_invertible_A0(self):
        s = np.linalg.svd(self.A0, compute_uv=False)
        return bool(s[-1] > 1e-12 * max(s[0], 1e-300))

    @cached_property
    def norms(self):
        """2-norms of B0, A0 and each A_j."""
        return (spectral_norm(self.B0), spectral_norm(self.A0),
                np.array([spectral_norm(A) for A in self.matrices]))

    def f_values(self, z):
        vals = np.empty(self.p, dtype=complex)
        for j, f in enumerate(self.functions):
            try:
                with np.errstate(all="ignore"):
                    vals[j] = f(z)
            except (ZeroDivisionError, OverflowError):
                vals[j] = np.nan
            if not np.isfinite(vals[j]):
                raise EvaluationFailure(f"term {j + 1} ({f.descriptor or 'callable'}) "
                                        f"is not finite at z={z}", term=j + 1, z=z)
        return vals


def evaluate_T(prob, z):
    """T(z) = -B0 + z A0 + sum_j f_j(z) A_j."""
    z = complex(z)
    T = -prob.B0 + z * prob.A0
    for fz, A in zip(prob.f_values(z), prob.matrices):
        T = T + fz * A
    return T


@dataclass(frozen=True, eq=False)
class Surrogate:
    B0: np.ndarray
    A0: np.ndarray
    poles: np.ndarray
    B: np.ndarray                      # shape (m, n, n)
    approx: Optional[object] = field(default=None)
    problem: Optional[SplitProblem] = field(default=None)

    @property
    def n(self):
        return self.B0.shape[0]

    @property
    def m(self):
        return len(self.poles)

    @cached_property
    def pole_guard(self):
        """Distance below which a point counts as sitting on a pole."""
        scale = np.max(np.abs(self.poles)) if self.m else 0.0
        return 1e-12 * max(1.0, scale)

    @cached_property
    def B_wide(self):
        """[B_1 B_2 ... B_m] as one n x mn matrix, so that sum_i B_i v_i is one product."""
        return np.ascontiguousarray(self.B.transpose(1, 0, 2).reshape(self.n, self.m * self.n))

    @cached_property
    def norms(self):
        """2-norms of B0, A0 and each B_i."""
        return (spectral_norm(self.B0), spectral_norm(self.A0),
                np.array([spectral_norm(Bi) for Bi in self.B]))

    def scale(self, lam):
        """||B0|| + |lam| ||A0|| + sum_i ||B_i||/|lam - s_i|."""
        nB0, nA0, nB = self.norms
        extra = float(np.sum(nB / np.abs(lam - self.poles))) if self.m else 0.0
        return nB0 + abs(lam) * nA0 + extra

    def check_off_poles(self, z):
        if self.m and np.min(np.abs(self.poles - z)) <= self.pole_guard:
            i = int(np.argmin(np.abs(self.poles - z)))
            raise AtPole(f"z={z} coincides with pole {i} ({self.poles[i]})")

    def project(self, Q):
        """Galerkin projection Q^H (.) Q of every coefficient matrix."""
        Qh = Q.conj().T
        B = np.einsum("ab,ibc,cd->iad", Qh, self.B, Q) if self.m else np.zeros((0, Q.shape[1], Q.shape[1]), complex)
        return Surrogate(Qh @ self.B0 @ Q, Qh @ self.A0 @ Q, self.poles, B, self.approx, None)


def build_surrogate(prob, ra):
    """Surrogate with B_i = sum_{j>=1} a_ij A_j.

    The linear part -B0 + z A0 is kept exactly.
    """
    if ra.p != prob.p:
        raise DimensionMismatch(f"approximation has {ra.p} functions, problem has {prob.p} terms")
    n = prob.n
    if prob.p:
        stack = np.stack(prob.matrices)
        B = np.einsum("ij,jab->iab", ra.coeffs, stack)
    else:
        B = np.zeros((ra.m, n, n), dtype=complex)
    return Surrogate(prob.B0, prob.A0, np.asarray(ra.poles, dtype=complex), B, ra, prob)


def linear_surrogate(B0, A0):
    """Surrogate without poles: the plain pencil -B0 + z A0."""
    B0 = as_cmatrix(B0, "B0")
    A0 = as_cmatrix(A0, "A0")
    n = B0.shape[0]
    return Surrogate(B0, A0, np.zeros(0, dtype=complex), np.zeros((0, n, n), dtype=complex))


def evaluate_surrogate(s, z):
    """T~(z) = -B0 + z A0 + sum_i B_i/(z - s_i)."""
    z = complex(z)
    s.check_off_poles(z)
    T = -s.B0 + z * s.A0
    if s.m:
        T = T + np.tensordot(1.0 / (z - s.poles), s.B, axes=1)
    return T


def _unit(u):
    u = np.asarray(u, dtype=complex)
    nrm = np.linalg.norm(u)
    return u / nrm if nrm > 0 else u


def residual_norm(prob, lam, u):
    """||T(lam) u||_2 for unit-normalized ``u``."""
    return float(np.linalg.norm(evaluate_T(prob, lam) @ _unit(u)))


def surrogate_residual_norm(s, lam, u):
    return float(np.linalg.norm(evaluate_surrogate(s, lam) @ _unit(u)))


def scaled_residual_sum(prob, pairs, use_exact_f=True, surrogate=None):
    """Sum of residuals over sum of the matching scale factors.

    The scale for a pair is ||B0|| + |lam| ||A0|| + sum_j |g_j(lam)| ||A_j||
    with g_j = f_j when ``use_exact_f`` and g_j = r_j otherwise (in which
    case the residual is taken with the surrogate as well).
    """
    pairs = list(pairs)
    if not pairs:
        raise ValueError("need at least one eigenpair")
    nB0, nA0, nA = prob.norms
    if not use_exact_f:
        if surrogate is None or surrogate.approx is None:
            raise ValueError("use_exact_f=False needs a surrogate built from a RationalApprox")
        ra = surrogate.approx
    num = 0.0
    gamma = 0.0
    for lam, u in pairs:
        if use_exact_f:
            num += residual_norm(prob, lam, u)
            g = np.abs(prob.f_values(lam))
        else:
            num += surrogate_residual_norm(surrogate, lam, u)
            g = np.abs([ra.evaluate(lam, j) for j in range(ra.p)])
        gamma += nB0 + abs(lam) * nA0 + float(np.dot(g, nA))
    return num / gamma

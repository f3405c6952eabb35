"""Checks of the theory behind the surrogate: determinant identity, residual
bounds, eigenvalue conditioning and the classification of extraneous
eigenvalues ("halo") that gather near the contour.
"""
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .contour import approx_error
from .errors import (AtPole, BoundViolated, ConvergenceFailure, DimensionCap, NotEigenpair,
                     NotIdentityM, RegionNotInterior, SingularMatrix)
from .linalg import DENSE_CAP, dense_geig, log_det, lu_factor, spectral_norm, wrap_phase
from .linop import materialize, schur_matrix
from .nlevp import evaluate_T


class HaloLabel(str, Enum):
    INTERIOR_TRUE = "InteriorTrue"
    EXTERIOR_LINEAR_PENCIL = "ExteriorLinearPencil"
    HALO = "Halo"
    POLE_ARTIFACT = "PoleArtifact"


def _require_identity_A0(s):
    if not np.array_equal(s.A0, np.eye(s.n)):
        raise NotIdentityM("this check assumes A0 = I (so that M = I)")


# ------------------------------------------------------------ determinants

@dataclass(frozen=True)
class LogDet:
    """A determinant stored as log|det| and its phase."""

    log_abs: float
    phase: float

    @property
    def value(self):
        if self.log_abs == -np.inf:
            return 0j
        return complex(np.exp(self.log_abs) * np.exp(1j * self.phase))

    def __mul__(self, other):
        return LogDet(self.log_abs + other.log_abs, wrap_phase(self.phase + other.phase))


def _log_scalar_power(x, n):
    x = complex(x)
    if x == 0:
        return LogDet(-np.inf, 0.0)
    return LogDet(n * np.log(abs(x)), wrap_phase(n * np.angle(x)))


def _rel_diff(a, b):
    if a.log_abs == -np.inf and b.log_abs == -np.inf:
        return 0.0
    if a.log_abs == -np.inf or b.log_abs == -np.inf:
        return np.inf
    d = (a.log_abs - b.log_abs) + 1j * wrap_phase(a.phase - b.phase)
    return float(abs(np.expm1(d)))


def det_identity_check(s, z, cap=DENSE_CAP):
    """Compare det(A - zI) with its Schur-complement expression.

    Off the poles the right side is det S(z) * prod_j (s_j - z)^n; at a
    pole s_i (within the surrogate's pole guard) it is
    det(B_i) * prod_{j != i} (s_j - s_i)^n.

    Returns
    -------
    lhs, rhs : LogDet
    rel_err : float
        |det_lhs/det_rhs - 1|, computed from the logarithms.
    """
    _require_identity_A0(s)
    N = (s.m + 1) * s.n
    if N > cap:
        raise DimensionCap(f"linearization size {N} exceeds cap {cap}")
    z = complex(z)
    A, _ = materialize(s)
    lhs = LogDet(*log_det(A - z * np.eye(N)))
    dist = np.abs(s.poles - z) if s.m else np.array([])
    if s.m and dist.min() <= s.pole_guard:
        i = int(np.argmin(dist))
        rhs = LogDet(*log_det(s.B[i]))
        for j in range(s.m):
            if j != i:
                rhs = rhs * _log_scalar_power(s.poles[j] - s.poles[i], s.n)
    else:
        rhs = LogDet(*log_det(schur_matrix(s, z)))
        for sj in s.poles:
            rhs = rhs * _log_scalar_power(sj - z, s.n)
    return lhs, rhs, _rel_diff(lhs, rhs)


# ------------------------------------------------------------ conditioning

@dataclass(frozen=True)
class ConditionEstimate:
    lam: complex
    kappa: float
    alpha_u: float
    alpha_y: float
    denom: float


def schur_derivative(s, z):
    """S'(z) = -A0 + sum_i B_i/(z - s_i)^2."""
    z = complex(z)
    s.check_off_poles(z)
    D = -s.A0.astype(complex)
    if s.m:
        D = D + np.tensordot(1.0 / (z - s.poles) ** 2, s.B, axes=1)
    return D


def left_eigvec(s, lam, seed=0, steps=2):
    """Unit y with S(lam)^H y = 0, by inverse iteration on S(lam)^H."""
    S = schur_matrix(s, lam)
    Sh = S.conj().T
    nrm = max(spectral_norm(S), 1e-300)
    try:
        fac = lu_factor(Sh)
    except SingularMatrix:
        fac = lu_factor(Sh + 1e-14 * nrm * np.eye(s.n))
    rng = np.random.default_rng(seed)
    y = rng.standard_normal(s.n) + 1j * rng.standard_normal(s.n)
    for _ in range(steps):
        y = fac.solve(y)
        y = y / np.linalg.norm(y)
    # measured against the size of the terms of S rather than ||S(lam)||,
    # which vanishes when n = 1
    if not np.all(np.isfinite(y)) or np.linalg.norm(Sh @ y) > 1e-6 * s.scale(lam):
        raise ConvergenceFailure(f"inverse iteration for the left eigenvector at {lam} did not converge")
    return y


def condition_number(s, lam, u, y, printed_form=False, check_tol=1e-6):
    """Condition number of a simple eigenvalue of the linearization (A0 = I).

    kappa = alpha_u alpha_y / |y^H S'(lam) u| with
    alpha_u = sqrt(1 + sum_i 1/|lam - s_i|^2) and
    alpha_y = sqrt(1 + sum_i ||B_i^H y||^2/|lam - s_i|^2), the latter being
    the norm of the left eigenvector [h; y] of A. ``printed_form`` swaps in
    sqrt(1 + sum_i ||B_i y||/|lam - s_i|^2) for comparison.
    """
    _require_identity_A0(s)
    lam = complex(lam)
    s.check_off_poles(lam)
    u = np.asarray(u, dtype=complex)
    y = np.asarray(y, dtype=complex)
    u = u / np.linalg.norm(u)
    y = y / np.linalg.norm(y)
    S = schur_matrix(s, lam)
    scale = max(spectral_norm(S), 1.0)
    if np.linalg.norm(S @ u) > check_tol * scale or np.linalg.norm(S.conj().T @ y) > check_tol * scale:
        raise NotEigenpair(f"(lam={lam}, u, y) are not right/left null vectors of S(lam)")
    d2 = np.abs(lam - s.poles) ** 2 if s.m else np.zeros(0)
    alpha_u = float(np.sqrt(1.0 + np.sum(1.0 / d2)))
    if printed_form:
        By = np.array([np.linalg.norm(Bi @ y) for Bi in s.B])
    else:
        By = np.array([np.linalg.norm(Bi.conj().T @ y) ** 2 for Bi in s.B])
    alpha_y = float(np.sqrt(1.0 + np.sum(By / d2))) if s.m else 1.0
    denom = float(abs(np.vdot(y, schur_derivative(s, lam) @ u)))
    kappa = alpha_u * alpha_y / denom if denom > 0 else np.inf
    return ConditionEstimate(lam, kappa, alpha_u, alpha_y, denom)


# ------------------------------------------------------------ residual bound

def prop1_bound_check(prob, s, ra, pairs, inner, norm="2", slack=1e-6, grid_density=200,
                      strict=True):
    """Check ||T(lam) u|| <= mu * eps for surrogate eigenpairs inside ``inner``.

    eps is the largest approximation error of the r_j over ``inner`` and
    mu = sum_j ||A_j||. ``norm`` selects the 2-norm or the inf-norm for
    vectors and matrices alike (u is normalized in the same norm).

    Returns a list of (lam, lhs, bound). With ``strict``, a violation
    raises BoundViolated naming the pair.
    """
    if norm not in ("2", "inf"):
        raise ValueError("norm must be '2' or 'inf'")
    ordv = 2 if norm == "2" else np.inf
    eps = max((approx_error(ra, f, inner, grid_density, term=j)
               for j, f in enumerate(prob.functions)), default=0.0)
    if norm == "2":
        mu = float(np.sum(prob.norms[2]))
    else:
        mu = float(sum(np.linalg.norm(A, np.inf) for A in prob.matrices))
    bound = mu * eps
    out = []
    for lam, u in pairs:
        lam = complex(lam)
        if not inner.is_inside(lam):
            raise RegionNotInterior(f"eigenvalue {lam} lies outside the inner region")
        u = np.asarray(u, dtype=complex)
        u = u / np.linalg.norm(u, ordv)
        lhs = float(np.linalg.norm(evaluate_T(prob, lam) @ u, ordv))
        if strict and lhs > bound * (1 + slack):
            raise BoundViolated(f"||T(lam)u|| = {lhs:.3e} exceeds mu*eps = {bound:.3e} at lam={lam}",
                                pair=(lam, u))
        out.append((lam, lhs, bound))
    return out


# ------------------------------------------------------------ halo

@dataclass(frozen=True)
class Classified:
    lam: complex
    label: HaloLabel
    low_confidence: bool = False
    matched: bool = False       # InteriorTrue: matched to a reference eigenvalue


def linear_pencil_eigenvalues(s):
    """Finite eigenvalues of the linear part B0 - z A0."""
    w, _ = dense_geig(s.B0, s.A0)
    return w[np.isfinite(w)]


def classify_halo(eigenvalues, s, contour, tol_match=1e-3, reference=None, delta=0.05):
    """Label every surrogate eigenvalue.

    The rules are tried in order: PoleArtifact (within 1e-8 diameter of a
    pole), InteriorTrue (inside and farther than delta*diameter from the
    contour), ExteriorLinearPencil (within ``tol_match`` of an eigenvalue of
    (B0, A0) lying outside the contour), Halo (within delta*diameter of the
    contour). Anything left is Halo with ``low_confidence`` set.
    """
    if hasattr(eigenvalues, "pairs"):
        eigenvalues = [p.lam for p in eigenvalues.pairs] + [p.lam for p in eigenvalues.rejected]
    lams = np.asarray(list(eigenvalues), dtype=complex)
    diam = contour.diameter
    pencil = linear_pencil_eigenvalues(s)
    outside = pencil[~np.asarray(contour.is_inside(pencil), dtype=bool)] if pencil.size else pencil
    ref = None if reference is None else np.asarray(reference, dtype=complex)
    out = []
    for lam in lams:
        dist_gamma = contour.distance_to_boundary(lam)
        if s.m and np.min(np.abs(s.poles - lam)) <= 1e-8 * diam:
            out.append(Classified(lam, HaloLabel.POLE_ARTIFACT))
        elif contour.is_inside(lam) and dist_gamma > delta * diam:
            matched = ref is not None and ref.size > 0 and np.min(np.abs(ref - lam)) <= tol_match
            out.append(Classified(lam, HaloLabel.INTERIOR_TRUE, matched=bool(matched)))
        elif outside.size and np.min(np.abs(outside - lam)) <= tol_match:
            out.append(Classified(lam, HaloLabel.EXTERIOR_LINEAR_PENCIL))
        elif dist_gamma <= delta * diam:
            out.append(Classified(lam, HaloLabel.HALO))
        else:
            out.append(Classified(lam, HaloLabel.HALO, low_confidence=True))
    return out


def match_greedy(a, b):
    """Greedy nearest-neighbour matching of two point sets.

    Returns (pairs, unmatched_a, unmatched_b) where pairs lists
    (i, j, |a_i - b_j|) in order of increasing distance.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.size == 0 or b.size == 0:
        return [], list(range(a.size)), list(range(b.size))
    D = np.abs(a[:, None] - b[None, :])
    order = np.dstack(np.unravel_index(np.argsort(D, axis=None, kind="stable"), D.shape))[0]
    used_a, used_b, pairs = set(), set(), []
    for i, j in order:
        if i in used_a or j in used_b:
            continue
        used_a.add(int(i))
        used_b.add(int(j))
        pairs.append((int(i), int(j), float(D[i, j])))
        if len(pairs) == min(a.size, b.size):
            break
    return (pairs, [i for i in range(a.size) if i not in used_a],
            [j for j in range(b.size) if j not in used_b])

"""Beyn's contour-integral method, used as an independent reference solver.

Moments of T(z)^{-1} V are accumulated over quadrature nodes on the
contour; an SVD of the zeroth moment reveals the number of interior
eigenvalues and a small matrix built from the first moment yields them.
"""
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .contour import Rectangle, quadrature_rule, trapezoid_rule
from .errors import ConvergenceFailure, RankDeficientProbe, SingularAtNode, SingularMatrix
from .linalg import dense_eig, lu_factor
from .nlevp import evaluate_T, residual_norm
from .solvers import EigenPair, EigenReport, canonical_phase, sort_key


@dataclass
class BeynConfig:
    N: int = 150
    ell: int = 10
    rank_tol: float = 1e-10
    seed: int = 0
    hankel: int = 1   # block Hankel depth K; K=1 uses only the zeroth and first moments

    def __post_init__(self):
        if self.N < 8:
            raise ValueError(f"Beyn needs N >= 8 nodes, got {self.N}")
        if self.ell < 1:
            raise ValueError("ell must be >= 1")
        if self.hankel < 1:
            raise ValueError("hankel depth must be >= 1")


def beyn_svd(A):
    """Thin SVD A = U diag(s) V^H with nonincreasing ``s``."""
    A = np.asarray(A, dtype=complex)
    try:
        U, s, Vh = scipy.linalg.svd(A, full_matrices=False)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise ConvergenceFailure(f"SVD failed: {exc}") from exc
    return U, s, Vh.conj().T


def _rule(contour, N):
    if isinstance(contour, Rectangle):
        return quadrature_rule(contour, N)
    return trapezoid_rule(contour, N)


def beyn_moments(prob, contour, N, V, depth):
    """Scaled moments M_p = (1/2 pi i) \\oint ((z - c)/rho)^p T(z)^{-1} V dz, p < 2*depth."""
    rule = _rule(contour, N)
    c = complex(contour.centroid)
    rho = 0.5 * contour.diameter
    moments = [np.zeros(V.shape, dtype=complex) for _ in range(2 * depth)]
    for z, w in zip(rule.nodes, rule.weights):
        try:
            fac = lu_factor(evaluate_T(prob, z))
        except SingularMatrix as exc:
            raise SingularAtNode(f"T(z) is singular at node z={z}; "
                                 "an eigenvalue lies on the contour") from exc
        X = fac.solve(V)
        # stored weights carry -1/(2 pi i); the moment wants +1/(2 pi i)
        zs = (z - c) / rho
        for p in range(2 * depth):
            moments[p] -= w * zs**p * X
    return moments, c, rho, rule


def beyn_solve(prob, contour, cfg=None):
    """Eigenvalues of ``prob`` inside ``contour`` by Beyn's method."""
    cfg = BeynConfig() if cfg is None else cfg
    n, ell, K = prob.n, cfg.ell, cfg.hankel
    rng = np.random.default_rng(cfg.seed)
    V = rng.standard_normal((n, ell)) + 1j * rng.standard_normal((n, ell))
    moments, c, rho, rule = beyn_moments(prob, contour, cfg.N, V, K)
    H0 = np.block([[moments[i + j] for j in range(K)] for i in range(K)])
    H1 = np.block([[moments[i + j + 1] for j in range(K)] for i in range(K)])
    U, s, W = beyn_svd(H0)
    if s.size == 0 or s[0] == 0:
        return EigenReport([], 0, [], {"method": "beyn", "rank": 0, "singular_values": []})
    r = int(np.sum(s > cfg.rank_tol * s[0]))
    if r == min(H0.shape):
        raise RankDeficientProbe(f"all {r} singular values above tolerance; the probe is too "
                                 f"small (ell={ell}, depth={K}), increase ell or depth")
    U0, s0, W0 = U[:, :r], s[:r], W[:, :r]
    B = U0.conj().T @ H1 @ W0 / s0[None, :]
    mu, Y = dense_eig(B)
    lam = c + rho * mu
    X = U0[:n, :] @ Y            # first block row carries the eigenvectors
    pairs, outside = [], []
    for i in range(r):
        u = canonical_phase(X[:, i])
        res = residual_norm(prob, lam[i], u)
        pair = EigenPair(complex(lam[i]), u, res, float("nan"), bool(contour.is_inside(lam[i])))
        (pairs if pair.inside else outside).append(pair)
    pairs.sort(key=lambda p: sort_key(p.lam, c))
    meta = {"method": "beyn", "N": cfg.N, "ell": ell, "hankel": K, "rank": r,
            "scheme": rule.scheme, "contour": contour.to_dict(),
            "singular_values": [float(x) for x in s],
            "discarded": [[p.lam.real, p.lam.imag] for p in outside]}
    return EigenReport(pairs, 0, [], meta)

"""Eigensolvers for the implicitly linearized surrogate.

All iterative methods work with the shift-invert operator
H = (A - sigma M)^{-1} M, whose dominant eigenvalues theta correspond to
the surrogate eigenvalues lam = sigma + 1/theta nearest the shift.
"""
from dataclasses import dataclass, field, asdict
from typing import Optional

import numpy as np
import scipy.linalg

from .errors import (AtPole, ConvergenceFailure, DegenerateBasis, DimensionCap, EvaluationFailure,
                     SingularMatrix)
from .linalg import DENSE_CAP, dense_eig, dense_geig, lu_factor, mgs_orthonormalize
from .linop import (BlockVector, apply_A, apply_M, apply_shift_invert, factor_shifted,
                    lift_eigvec, materialize, schur_matrix)
from .nlevp import residual_norm, scaled_residual_sum, surrogate_residual_norm

METHODS = ("full-arnoldi", "full-subspace", "reduced-subspace", "dense")


@dataclass
class SolveConfig:
    method: str = "full-arnoldi"
    sigma: Optional[complex] = None    # None: contour centroid
    k: int = 5
    nu: Optional[int] = None           # None: 2k
    q: int = 5
    max_outer: int = 50
    tol: float = 1e-10
    seed: int = 0

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.sigma is not None:
            self.sigma = complex(self.sigma)
        if self.nu is None:
            self.nu = 2 * self.k
        if not 1 <= self.k <= self.nu:
            raise ValueError(f"need 1 <= k <= nu, got k={self.k}, nu={self.nu}")
        if self.q < 1:
            raise ValueError("q must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_outer < 1:
            raise ValueError("max_outer must be >= 1")

    def shift(self, contour):
        return self.sigma if self.sigma is not None else complex(contour.centroid)


@dataclass
class EigenPair:
    lam: complex
    u: np.ndarray
    residual_T: float
    residual_surrogate: float
    inside: bool
    pole_flag: bool = False
    cond: Optional[float] = None

    def to_dict(self, vectors=False):
        d = {"re": self.lam.real, "im": self.lam.imag,
             "residual_T": self.residual_T, "residual_surrogate": self.residual_surrogate,
             "inside": self.inside, "pole_flag": self.pole_flag, "cond": self.cond}
        if vectors:
            d["u"] = [[x.real, x.imag] for x in self.u]
        return d


@dataclass
class EigenReport:
    pairs: list
    iterations: int = 0
    rejected: list = field(default_factory=list)   # pole-flagged pairs
    metadata: dict = field(default_factory=dict)

    @property
    def eigenvalues(self):
        return np.array([p.lam for p in self.pairs], dtype=complex)

    def interior(self):
        return [p for p in self.pairs if p.inside]

    @property
    def interior_eigenvalues(self):
        return np.array([p.lam for p in self.interior()], dtype=complex)

    def to_dict(self, vectors=False):
        return {"metadata": self.metadata, "iterations": self.iterations,
                "pairs": [p.to_dict(vectors) for p in self.pairs],
                "rejected": [p.to_dict(vectors) for p in self.rejected]}


def canonical_phase(u):
    """Scale ``u`` to unit norm with its largest-magnitude entry real positive."""
    u = np.asarray(u, dtype=complex)
    nrm = np.linalg.norm(u)
    if nrm == 0:
        return u
    i = int(np.argmax(np.abs(u)))
    return u * (abs(u[i]) / u[i]) / nrm


def sort_key(lam, sigma):
    # distance rounded so that conjugate pairs tie, then smaller Im, then smaller Re
    d = abs(lam - sigma)
    return (round(d, 10 - int(np.floor(np.log10(max(d, 1e-300))))), lam.imag, lam.real)


def _rng(seed):
    return np.random.default_rng(seed)


def _randn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def _pole_flag(s, lam, contour):
    if not s.m:
        return False
    return bool(np.min(np.abs(s.poles - lam)) <= 1e-8 * contour.diameter)


def make_report(s, candidates, contour, sigma, iterations, metadata):
    """Residuals, flags and ordering for a list of (lam, u) candidates."""
    pairs, rejected = [], []
    for lam, u in candidates:
        lam = complex(lam)
        u = canonical_phase(u)
        flag = _pole_flag(s, lam, contour)
        if flag:
            res_s = res_T = float("inf")
        else:
            try:
                res_s = surrogate_residual_norm(s, lam, u)
            except AtPole:
                res_s, flag = float("inf"), True
            res_T = float("nan")
            if s.problem is not None:
                try:
                    res_T = residual_norm(s.problem, lam, u)
                except EvaluationFailure:
                    res_T = float("inf")
        pair = EigenPair(lam, u, res_T, res_s, bool(contour.is_inside(lam)), flag)
        (rejected if flag else pairs).append(pair)
    pairs.sort(key=lambda p: sort_key(p.lam, sigma))
    rejected.sort(key=lambda p: sort_key(p.lam, sigma))
    meta = {"sigma": [sigma.real, sigma.imag], "contour": contour.to_dict(),
            "n": s.n, "m": s.m}
    if s.approx is not None:
        meta["n_quad"] = s.approx.n_quad
        meta["scheme"] = s.approx.scheme
    meta.update(metadata)
    return EigenReport(pairs, iterations, rejected, meta)


# ------------------------------------------------------------------ Arnoldi

def krylov_schur(matvec, N, k, ncv, tol=1e-12, max_restarts=200, rng=None, v0=None):
    """Thick-restart (Krylov-Schur) Arnoldi for the ``k`` largest-magnitude eigenvalues.

    Parameters
    ----------
    matvec : callable
        Maps a length-N vector to its image.
    ncv : int
        Largest basis size; restarts keep about (ncv + k)/2 Schur vectors.
    tol : float
        A Ritz pair (theta, x) is converged when its residual estimate is
        at most ``tol * |theta|``.

    Returns
    -------
    theta : (k,) complex, by decreasing magnitude
    X : (N, k) complex Ritz vectors with unit 2-norm
    restarts : int
    """
    rng = _rng(0) if rng is None else rng
    ncv = min(ncv, N)
    k = min(k, ncv - 1) if ncv > 1 else 1
    V = np.zeros((N, ncv + 1), dtype=complex)
    H = np.zeros((ncv + 1, ncv), dtype=complex)
    v = _randn(rng, N) if v0 is None else np.asarray(v0, dtype=complex)
    V[:, 0] = v / np.linalg.norm(v)
    p = 0
    for restart in range(max_restarts + 1):
        for j in range(p, ncv):
            w = matvec(V[:, j])
            h = V[:, :j + 1].conj().T @ w
            w = w - V[:, :j + 1] @ h
            h2 = V[:, :j + 1].conj().T @ w      # second pass
            w = w - V[:, :j + 1] @ h2
            H[:j + 1, j] += h + h2
            beta = np.linalg.norm(w)
            if beta <= 1e-14 * max(np.linalg.norm(H[:j + 1, j]), 1e-300):
                # invariant subspace: continue with a fresh orthogonal direction
                w = _randn(rng, N)
                for _ in range(2):
                    w = w - V[:, :j + 1] @ (V[:, :j + 1].conj().T @ w)
                beta_next = np.linalg.norm(w)
                H[j + 1, j] = 0.0
                V[:, j + 1] = w / beta_next
            else:
                H[j + 1, j] = beta
                V[:, j + 1] = w / beta
        m = ncv
        T, Z = scipy.linalg.schur(H[:m, :m], output="complex")
        theta = np.diag(T)
        order = np.argsort(-np.abs(theta), kind="stable")
        keep = min(max(k + (m - k) // 2, k), m - 1) if m > 1 else 1
        thresh = np.abs(theta[order[keep - 1]])
        T, Z, sdim = scipy.linalg.schur(H[:m, :m], output="complex",
                                        sort=lambda x: abs(x) >= thresh * (1 - 1e-12))
        keep = max(min(sdim, m - 1), 1)
        b = H[m, :m] @ Z                     # residual row in Schur coordinates
        # Ritz pairs of the leading keep x keep block
        evals, Y = scipy.linalg.eig(T[:keep, :keep])
        Y = Y / np.linalg.norm(Y, axis=0)
        res = np.abs(b[:keep] @ Y)
        top = np.argsort(-np.abs(evals), kind="stable")[:k]
        if np.all(res[top] <= tol * np.abs(evals[top])) or restart == max_restarts:
            if restart == max_restarts and not np.all(res[top] <= tol * np.abs(evals[top])):
                raise ConvergenceFailure(
                    f"Arnoldi: {int(np.sum(res[top] > tol * np.abs(evals[top])))} of {k} Ritz "
                    f"values unconverged after {max_restarts} restarts")
            X = V[:, :m] @ (Z[:, :keep] @ Y[:, top])
            X = X / np.linalg.norm(X, axis=0)
            return evals[top], X, restart
        # truncate to the kept Schur vectors
        Vn = V[:, :m] @ Z[:, :keep]
        V[:, :keep] = Vn
        V[:, keep] = V[:, m]
        V[:, keep + 1:] = 0
        H[:] = 0
        H[:keep, :keep] = T[:keep, :keep]
        H[keep, :keep] = b[:keep]
        p = keep
    raise ConvergenceFailure("Arnoldi restart loop exhausted")   # pragma: no cover


def _shift_invert_operator(s, sigma):
    fac = factor_shifted(s, sigma)
    m, n = s.m, s.n

    def matvec(x):
        return apply_shift_invert(fac, s, BlockVector.from_flat(x, m, n)).flat()

    return fac, matvec


def _arnoldi_pairs(s, sigma, k, nu, tol, seed, max_restarts):
    _, matvec = _shift_invert_operator(s, sigma)
    N = (s.m + 1) * s.n
    ncv = max(2 * nu, k + 20)
    theta, X, restarts = krylov_schur(matvec, N, k, ncv, tol=tol, max_restarts=max_restarts,
                                      rng=_rng(seed))
    lam = sigma + 1.0 / theta
    U = X[s.m * s.n:, :]
    return lam, U, restarts


def solve_full_arnoldi(s, cfg, contour):
    """Shift-invert thick-restart Arnoldi on the full (m+1)n linearization."""
    sigma = cfg.shift(contour)
    lam, U, restarts = _arnoldi_pairs(s, sigma, cfg.k, cfg.nu, min(cfg.tol, 1e-12),
                                      cfg.seed, cfg.max_outer * 4)
    return make_report(s, zip(lam, U.T), contour, sigma, restarts,
                       {"method": "full-arnoldi", "k": cfg.k, "nu": cfg.nu, "seed": cfg.seed})


# ---------------------------------------------------------- subspace iteration

def _power_steps(fac, s, W, q):
    for _ in range(q):
        W = apply_shift_invert(fac, s, W)
        nrm = W.norm()
        W = W.scaled(1.0 / np.where(nrm > 0, nrm, 1.0))
    return W


def _nearest(lams, sigma, k):
    idx = sorted(range(len(lams)), key=lambda i: sort_key(complex(lams[i]), sigma))
    return idx[:k]


def solve_full_subspace(s, cfg, contour, projection="shift-invert"):
    """Subspace iteration on H followed by Rayleigh-Ritz.

    ``projection="shift-invert"`` extracts Ritz values from Q^H H Q (one
    extra application of H per sweep); ``"pencil"`` uses the pencil
    (Q^H A Q, Q^H M Q) instead, which can produce spurious Ritz values
    near sigma. Converged when each of the k Ritz pairs nearest sigma satisfies
    ||T~(lam) u|| <= tol * (||B0|| + |lam| ||A0|| + sum_i ||B_i||/|lam - s_i|).
    """
    if projection not in ("shift-invert", "pencil"):
        raise ValueError(f"unknown projection {projection!r}")
    sigma = cfg.shift(contour)
    m, n, nu = s.m, s.n, cfg.nu
    N = (m + 1) * n
    if nu > N:
        raise DegenerateBasis(f"nu={nu} exceeds the linearization size {N}")
    fac = factor_shifted(s, sigma)
    rng = _rng(cfg.seed)
    W = BlockVector.from_flat(_randn(rng, N, nu), m, n)
    for it in range(1, cfg.max_outer + 1):
        W = _power_steps(fac, s, W, cfg.q)
        Q, rank = mgs_orthonormalize(W.flat())
        if rank < cfg.k:
            raise DegenerateBasis(f"subspace rank {rank} < k={cfg.k}")
        Qb = BlockVector.from_flat(Q, m, n)
        if projection == "shift-invert":
            G = Q.conj().T @ apply_shift_invert(fac, s, Qb).flat()
            theta, X = dense_eig(G)
            with np.errstate(divide="ignore"):
                lams = np.where(theta != 0, sigma + 1.0 / np.where(theta != 0, theta, 1), np.inf)
        else:
            Ap = Q.conj().T @ apply_A(s, Qb).flat()
            Mp = Q.conj().T @ apply_M(s, Qb).flat()
            lams, X = dense_geig(Ap, Mp)
        finite = np.flatnonzero(np.isfinite(lams))
        sel = finite[_nearest(lams[finite], sigma, cfg.k)]
        Wr = Q @ X
        cands = [(complex(lams[i]), Wr[m * n:, i]) for i in sel]
        ok = len(cands) >= cfg.k
        for lam, u in cands:
            try:
                if surrogate_residual_norm(s, lam, u) > cfg.tol * s.scale(lam):
                    ok = False
            except AtPole:
                pass
        if ok:
            return make_report(s, cands, contour, sigma, it,
                               {"method": "full-subspace", "k": cfg.k, "nu": nu, "q": cfg.q,
                                "tol": cfg.tol, "seed": cfg.seed, "projection": projection})
        # restart from the Ritz vectors, wanted ones first
        chosen = set(int(i) for i in sel)
        rest = [i for i in finite if int(i) not in chosen]
        Wn = Wr[:, list(sel) + rest][:, :nu]
        if Wn.shape[1] < nu:
            Wn = np.hstack([Wn, _randn(rng, N, nu - Wn.shape[1])])
        W = BlockVector.from_flat(Wn, m, n)
    raise ConvergenceFailure(f"full subspace iteration did not converge in {cfg.max_outer} sweeps")


def _solve_reduced(sr, sigma, want, seed, inside):
    """Eigenpairs (lam, y) of a projected surrogate with ``inside(lam)`` true.

    H = (A - sigma M)^{-1} M is formed through block elimination (only an
    nu x nu factorization) and its eigenvalues computed densely; each y is
    then the null vector of the small matrix S_r(lam). Above the dense cap,
    Arnoldi returns the ``want`` values nearest sigma instead.
    """
    m, n = sr.m, sr.n
    N = (m + 1) * n
    if N > DENSE_CAP:
        lam, Y, _ = _arnoldi_pairs(sr, sigma, want, want, 1e-12, seed, 400)
        return lam, Y
    fac = factor_shifted(sr, sigma)
    H = apply_shift_invert(fac, sr, BlockVector.from_flat(np.eye(N, dtype=complex), m, n)).flat()
    theta = scipy.linalg.eigvals(H, overwrite_a=True, check_finite=False)
    theta = theta[np.abs(theta) > 1e-14 * np.max(np.abs(theta))]
    lam = sigma + 1.0 / theta
    lam = lam[[bool(inside(x)) for x in lam]]
    Y = np.empty((n, len(lam)), dtype=complex)
    for i, x in enumerate(lam):
        try:
            _, _, Vh = scipy.linalg.svd(schur_matrix(sr, x))
            Y[:, i] = Vh[-1].conj()
        except AtPole:
            Y[:, i] = 0
    return lam, Y


def solve_reduced_subspace(prob, s, cfg, contour):
    """Subspace iteration keeping only the bottom blocks (length n) of each iterate.

    Every sweep projects the surrogate onto the span U of the bottom blocks,
    solves the projected rational problem, and restarts from the lifted
    Ritz pairs. Converges when

        sum ||T~(lam) u|| <= tol * sum (||B0|| + |lam| ||A0|| + sum_j |r_j(lam)| ||A_j||).
    """
    sigma = cfg.shift(contour)
    m, n, nu = s.m, s.n, cfg.nu
    if nu > n:
        raise DegenerateBasis(f"nu={nu} must not exceed n={n} for a reduced projection")
    if s.approx is None:
        raise ValueError("reduced subspace iteration needs a surrogate built from a RationalApprox")
    fac = factor_shifted(s, sigma)
    rng = _rng(cfg.seed)
    starts = [BlockVector.from_flat(_randn(rng, (m + 1) * n), m, n) for _ in range(nu)]
    history = []
    prev_count = None
    for it in range(1, cfg.max_outer + 1):
        U = np.empty((n, nu), dtype=complex)
        for c, w in enumerate(starts):       # one live block vector at a time
            U[:, c] = _power_steps(fac, s, w, cfg.q).u
        Q, rank = mgs_orthonormalize(U)
        if rank < cfg.k:
            raise DegenerateBasis(f"reduced basis rank {rank} < k={cfg.k}")
        sr = s.project(Q)
        lam, Y = _solve_reduced(sr, sigma, 2 * nu, cfg.seed + it, contour.is_inside)
        # interior, off-pole Ritz pairs ranked by scaled surrogate residual
        cands = []
        for i in range(len(lam)):
            if (contour.is_inside(lam[i]) and not _pole_flag(s, lam[i], contour)
                    and np.any(Y[:, i])):
                u = Q @ Y[:, i]
                u = u / np.linalg.norm(u)
                l = complex(lam[i])
                cands.append((surrogate_residual_norm(s, l, u) / s.scale(l), l, u))
        cands.sort(key=lambda c: c[0])
        pairs = [(l, u) for _, l, u in cands[:cfg.k]]
        crit = scaled_residual_sum(prob, pairs, use_exact_f=False, surrogate=s) if pairs else np.inf
        history.append(float(crit))
        if crit <= cfg.tol and (len(pairs) >= cfg.k or len(pairs) == prev_count):
            return make_report(s, pairs, contour, sigma, it,
                               {"method": "reduced-subspace", "k": cfg.k, "nu": nu, "q": cfg.q,
                                "tol": cfg.tol, "seed": cfg.seed, "stop_history": history})
        prev_count = len(pairs)
        # restart from the best nu interior Ritz pairs, padded with random vectors
        starts = [lift_eigvec(s, l, u) for _, l, u in cands[:nu]]
        while len(starts) < nu:
            starts.append(BlockVector.from_flat(_randn(rng, (m + 1) * n), m, n))
    raise ConvergenceFailure(f"reduced subspace iteration did not converge in {cfg.max_outer} "
                             f"sweeps (last criterion {history[-1]:.3e})")


def solve_dense_linearization(s, contour, sigma=None, cap=DENSE_CAP):
    """Materialize (A, M) and return every finite eigenvalue."""
    N = (s.m + 1) * s.n
    if N > cap:
        raise DimensionCap(f"linearization size {N} exceeds dense cap {cap}")
    sigma = complex(contour.centroid) if sigma is None else complex(sigma)
    A, M = materialize(s)
    if s.problem is None or s.problem.has_invertible_A0:
        # M = diag(I, A0): M^{-1} A only needs A0^{-1} on the last block row,
        # and the standard QR algorithm is several times cheaper than QZ
        try:
            mn = s.m * s.n
            A[mn:, :] = lu_factor(s.A0).solve(A[mn:, :])
            lam, X = dense_eig(A, cap=cap)
        except SingularMatrix:
            A, M = materialize(s)
            lam, X = dense_geig(A, M, cap=cap)
    else:
        lam, X = dense_geig(A, M, cap=cap)
    keep = np.flatnonzero(np.isfinite(lam))
    return make_report(s, [(lam[i], X[s.m * s.n:, i]) for i in keep], contour, sigma, 0,
                       {"method": "dense", "size": N})


def solve(s, cfg, contour, prob=None):
    """Dispatch on ``cfg.method``."""
    if cfg.method == "full-arnoldi":
        rep = solve_full_arnoldi(s, cfg, contour)
    elif cfg.method == "full-subspace":
        rep = solve_full_subspace(s, cfg, contour)
    elif cfg.method == "reduced-subspace":
        rep = solve_reduced_subspace(prob if prob is not None else s.problem, s, cfg, contour)
    else:
        rep = solve_dense_linearization(s, contour, cfg.shift(contour))
    rep.metadata["config"] = {k: (v if not isinstance(v, complex) else [v.real, v.imag])
                              for k, v in asdict(cfg).items()}
    return rep

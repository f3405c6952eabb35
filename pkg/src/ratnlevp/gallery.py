"""Built-in test problems, their reference linearizations, and problem files.

Problem directory layout::

    problem.json   {"name": ..., "n": n, "p": p, "B0": "B0.txt", "A0": "A0.txt",
                    "terms": [{"matrix": "A1.txt", "function": "exp(-1)"}, ...]}
    *.txt          first line "rows cols", then rows*cols lines "re im" (row-major)
"""
import json
import os
from pathlib import Path

import numpy as np

from . import functions as fn
from .contour import Circle, Ellipse, Rectangle
from .errors import ParseError, UnknownFunctionDescriptor
from .linalg import dense_geig
from .nlevp import SplitProblem

# Experiment defaults: contour, m (per side on rectangles when per_side), solver
# settings, Beyn settings for the reference run, expected interior count.
EXPERIMENTS = {
    "delay": dict(params={"tau": 1.0}, contour=Circle(-1.0, 6.0), m=50,
                  solver=dict(method="full-arnoldi", k=5), beyn=dict(N=150, ell=2, hankel=3),
                  expected=5),
    "delay-rect": dict(problem="delay", params={"tau": 1.0},
                       contour=Rectangle(-3 - 6j, 1 + 6j), m=40, per_side=True,
                       solver=dict(method="dense", k=5), beyn=dict(N=150, ell=2, hankel=3),
                       expected=5),
    "fem": dict(params={"n": 100}, contour=Circle(150.0, 150.0), m=6,
                solver=dict(method="full-arnoldi", k=5), beyn=dict(N=150, ell=12, hankel=1),
                expected=5),
    "hadeler": dict(params={"n": 200, "b0": 100.0}, contour=Circle(-30.0, 10.0), m=50,
                    solver=dict(method="full-arnoldi", k=12), beyn=dict(N=100, ell=20, hankel=1),
                    expected=12),
    "hadeler-ellipse": dict(problem="hadeler", params={"n": 200, "b0": 100.0},
                            contour=Ellipse(-30.0, 10.0, 1.0), m=8,
                            solver=dict(method="full-arnoldi", k=12), beyn=dict(N=50, ell=20, hankel=1),
                            expected=12),
    "quadratic": dict(params={"n": 4}, contour=Rectangle(-1 - 1.5j, 0 + 1.5j), m=60, per_side=True,
                      solver=dict(method="dense", k=8), beyn=dict(N=150, ell=4, hankel=3),
                      expected=8),
}


def make_delay(tau=1.0):
    """Characteristic matrix of x'(t) = -B0 x(t) + A1 x(t - tau)."""
    if not tau > 0:
        raise ValueError("tau must be positive")
    B0 = np.array([[-5.0, 1.0], [2.0, -6.0]])
    A1 = -np.array([[-2.0, 1.0], [4.0, -1.0]])
    return SplitProblem(B0, np.eye(2), ((A1, fn.exp(-tau)),), name="delay")


def fem_string_matrices(n):
    """Stiffness ``K`` and mass-like ``A0`` of the FE string, as printed.

    The problem reads K + z A0 + 1/(1 - z) e_n e_n^T.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    K = n * (2 * np.eye(n) - np.eye(n, k=1) - np.eye(n, k=-1))
    K[-1, -1] = n
    A0 = -(4 * np.eye(n) + np.eye(n, k=1) + np.eye(n, k=-1)) / (6.0 * n)
    A0[-1, -1] = -2.0 / (6.0 * n)
    return K, A0


def make_fem_string(n=100):
    K, A0 = fem_string_matrices(n)
    E = np.zeros((n, n))
    E[-1, -1] = 1.0
    # -B0 + z A0 form: B0 = -K
    return SplitProblem(-K, A0, ((E, fn.recip(1.0)),), name="fem")


def make_exact_fem_linearization(n=100):
    """Quadrature-free 2n x 2n pencil (A, M) for the FE string problem."""
    K, A0 = fem_string_matrices(n)
    I = np.eye(n)
    E = np.zeros((n, n))
    E[-1, -1] = 1.0
    A = np.block([[I, -I], [E, K]])
    M = np.block([[I, np.zeros((n, n))], [np.zeros((n, n)), -A0]])
    return A, M


def hadeler_matrices(n, b0=100.0):
    j = np.arange(1, n + 1)
    J, K = np.meshgrid(j, j, indexing="ij")
    B1 = (n + 1 - np.maximum(J, K)) * J * K * 1.0
    B2 = n * np.eye(n) + 1.0 / (J + K)
    return B1, B2, b0 * np.eye(n)


def make_hadeler(n=200, b0=100.0):
    """T(z) = (e^z - 1) B1 + z^2 B2 - b0 I; there is no z-linear term (A0 = 0)."""
    if n < 1 or not b0 > 0:
        raise ValueError("need n >= 1 and b0 > 0")
    B1, B2, B0 = hadeler_matrices(n, b0)
    return SplitProblem(B0, np.zeros((n, n)), ((B1, fn.expm1(1.0)), (B2, fn.poly(2))),
                        name="hadeler")


def make_quadratic_halo(n=4):
    """(-B0 + z I + z^2 A2) u = 0 with the small tridiagonal test matrices."""
    if n < 2:
        raise ValueError("n must be >= 2")
    B0 = -2 * np.eye(n) + np.diag(np.ones(n - 1), 1) + np.diag(np.ones(n - 1), -1)
    A0 = np.eye(n)
    e1 = np.eye(n)[:, :1]
    ones = np.ones((n, 1))
    A2 = 0.5 * (n * np.eye(n) - e1 @ ones.T - ones @ e1.T)
    return SplitProblem(B0, A0, ((A2, fn.poly(2)),), name="quadratic")


MAKERS = {"delay": make_delay, "fem": make_fem_string, "hadeler": make_hadeler,
          "quadratic": make_quadratic_halo}


def make_problem(name, **params):
    try:
        maker = MAKERS[name]
    except KeyError:
        raise KeyError(f"unknown gallery problem {name!r}; choose from {sorted(MAKERS)}") from None
    return maker(**params)


def polynomial_linearization(prob):
    """Companion pencil for a problem whose terms are all ``poly(d)``.

    Returns ``(A, M)`` of size D n, D the degree, whose eigenvalues are
    those of T. Returns None when some term is not a polynomial.
    """
    n = prob.n
    coeffs = {0: -prob.B0.copy(), 1: prob.A0.copy()}
    for A, f in prob.terms:
        if f.degree < 0:
            return None
        coeffs[f.degree] = coeffs.get(f.degree, np.zeros((n, n), complex)) + A
    D = max(d for d, C in coeffs.items() if np.any(C != 0))
    D = max(D, 1)
    C = [coeffs.get(d, np.zeros((n, n), complex)) for d in range(D + 1)]
    A = np.zeros((D * n, D * n), dtype=complex)
    M = np.eye(D * n, dtype=complex)
    for d in range(D - 1):
        A[d * n:(d + 1) * n, (d + 1) * n:(d + 2) * n] = np.eye(n)
    for d in range(D):
        A[(D - 1) * n:, d * n:(d + 1) * n] = -C[d]
    M[(D - 1) * n:, (D - 1) * n:] = C[D]
    return A, M


def reference_eigenvalues(prob):
    """Exact eigenvalues from a quadrature-free linearization, when one exists.

    Covers polynomial problems and the FE string problem; returns None
    otherwise (callers fall back to Beyn's method). The block pencil of the
    FE problem carries the pole z = 1 as an eigenvalue of multiplicity n - 1
    (its determinant has a factor (1 - z)^(n-1)); values at a pole of some
    f_j are therefore dropped.
    """
    lin = polynomial_linearization(prob)
    if lin is None and prob.name == "fem":
        lin = make_exact_fem_linearization(prob.n)
    if lin is None:
        return None
    w, _ = dense_geig(*lin)
    w = w[np.isfinite(w)]
    for f in prob.functions:
        for loc, _ in f.poles:
            w = w[np.abs(w - loc) > 1e-6 * max(1.0, abs(loc))]
    return w


# ---------------------------------------------------------------- file format

def write_matrix(path, A):
    A = np.asarray(A, dtype=complex)
    lines = [f"{A.shape[0]} {A.shape[1]}"]
    lines += [f"{float(x.real)!r} {float(x.imag)!r}" for x in A.ravel()]
    Path(path).write_text("\n".join(lines) + "\n")


def read_matrix(path):
    path = Path(path)
    try:
        text = path.read_text().splitlines()
    except OSError as exc:
        raise ParseError(f"{path}: cannot read ({exc})") from exc
    if not text:
        raise ParseError(f"{path}:1: empty file")
    try:
        rows, cols = (int(t) for t in text[0].split())
    except ValueError:
        raise ParseError(f"{path}:1: expected 'rows cols', got {text[0]!r}") from None
    if rows < 0 or cols < 0:
        raise ParseError(f"{path}:1: negative dimension")
    body = [ln for ln in text[1:] if ln.strip()]
    if len(body) != rows * cols:
        raise ParseError(f"{path}: expected {rows * cols} entries, found {len(body)}")
    out = np.empty(rows * cols, dtype=complex)
    for i, ln in enumerate(body):
        parts = ln.split()
        try:
            if len(parts) == 1:
                out[i] = float(parts[0])
            elif len(parts) == 2:
                out[i] = complex(float(parts[0]), float(parts[1]))
            else:
                raise ValueError
        except ValueError:
            raise ParseError(f"{path}:{i + 2}: expected 're im', got {ln!r}") from None
    return out.reshape(rows, cols)


def save_problem(prob, directory):
    """Write ``prob`` in the problem directory format."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    write_matrix(d / "B0.txt", prob.B0)
    write_matrix(d / "A0.txt", prob.A0)
    terms = []
    for j, (A, f) in enumerate(prob.terms, start=1):
        if not f.descriptor:
            raise UnknownFunctionDescriptor(f"term {j} has no descriptor and cannot be saved")
        write_matrix(d / f"A{j}.txt", A)
        terms.append({"matrix": f"A{j}.txt", "function": f.descriptor})
    manifest = {"name": prob.name, "n": prob.n, "p": prob.p,
                "B0": "B0.txt", "A0": "A0.txt", "terms": terms}
    (d / "problem.json").write_text(json.dumps(manifest, indent=2) + "\n")


def load_problem(path):
    """Load a problem directory (or its ``problem.json``)."""
    path = Path(path)
    manifest_path = path / "problem.json" if path.is_dir() else path
    base = manifest_path.parent
    try:
        manifest = json.loads(manifest_path.read_text())
    except OSError as exc:
        raise ParseError(f"{manifest_path}: cannot read ({exc})") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{manifest_path}:{exc.lineno}: {exc.msg}") from exc
    for key in ("n", "B0", "A0", "terms"):
        if key not in manifest:
            raise ParseError(f"{manifest_path}: missing field {key!r}")
    n = manifest["n"]
    terms_spec = manifest["terms"]
    if "p" in manifest and manifest["p"] != len(terms_spec):
        raise ParseError(f"{manifest_path}: p={manifest['p']} but {len(terms_spec)} terms listed")

    def matrix(name):
        A = read_matrix(base / name)
        if A.shape != (n, n):
            raise ParseError(f"{base / name}: shape {A.shape} does not match n={n}")
        return A

    terms = []
    for j, t in enumerate(terms_spec, start=1):
        if "matrix" not in t or "function" not in t:
            raise ParseError(f"{manifest_path}: terms[{j - 1}] needs 'matrix' and 'function'")
        terms.append((matrix(t["matrix"]), fn.parse_descriptor(t["function"])))
    return SplitProblem(matrix(manifest["B0"]), matrix(manifest["A0"]), tuple(terms),
                        name=manifest.get("name", os.path.basename(str(base))))

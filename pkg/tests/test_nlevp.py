import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import crandn, random_surrogate
from ratnlevp.contour import Circle, RationalApprox, is_inside, approx_error, build_rational_approx, quadrature_rule
from ratnlevp.errors import AtPole, DimensionMismatch, EvaluationFailure
from ratnlevp.functions import exp
from ratnlevp.gallery import EXPERIMENTS, make_delay, make_fem_string, make_problem
from ratnlevp.linop import schur_matrix
from ratnlevp.nlevp import (SplitProblem, Surrogate, build_surrogate, evaluate_surrogate, evaluate_T,
                            linear_surrogate, residual_norm, scaled_residual_sum)


def test_delay_at_zero():
    # -B0 = [[5, -1], [-2, 6]] and A1 = [[2, -1], [-4, 1]] added by hand
    np.testing.assert_allclose(evaluate_T(make_delay(), 0), [[7, -2], [-6, 7]])


def test_zero_functions_give_minus_B0(rng):
    B0 = crandn(rng, 3, 3)
    prob = SplitProblem(B0, crandn(rng, 3, 3), ((crandn(rng, 3, 3), lambda z: 0 * z),))
    np.testing.assert_allclose(evaluate_T(prob, 0), -B0)


def test_fem_at_zero():
    T = evaluate_T(make_fem_string(3), 0)
    K = 3 * np.array([[2, -1, 0], [-1, 2, -1], [0, -1, 1]], dtype=float)
    K[2, 2] += 1.0
    np.testing.assert_allclose(T, K)


def test_evaluation_failure_names_term():
    with pytest.raises(EvaluationFailure) as exc:
        evaluate_T(make_fem_string(3), 1.0)
    assert exc.value.term == 1


def test_split_problem_shape_checks():
    with pytest.raises(DimensionMismatch):
        SplitProblem(np.eye(2), np.eye(3))
    with pytest.raises(DimensionMismatch):
        SplitProblem(np.eye(2), np.eye(2), ((np.eye(3), exp(1)),))


def _ra(coeffs, poles):
    return RationalApprox(np.asarray(poles, complex), np.asarray(coeffs, complex).reshape(len(poles), -1))


def test_build_surrogate_zero_coefficients(rng):
    prob = SplitProblem(np.eye(2), np.eye(2), ((crandn(rng, 2, 2), exp(1)),))
    s = build_surrogate(prob, _ra(np.zeros(3), [1, 2, 3]))
    assert np.all(s.B == 0)


def test_build_surrogate_identity_term(rng):
    prob = SplitProblem(np.eye(2), np.eye(2), ((np.eye(2), exp(1)),))
    alpha = crandn(rng, 3)
    s = build_surrogate(prob, _ra(alpha, [1, 2, 3]))
    for a, B in zip(alpha, s.B):
        np.testing.assert_allclose(B, a * np.eye(2))
    assert s.B0 is prob.B0 and s.A0 is prob.A0


def test_build_surrogate_linearity(rng):
    prob = SplitProblem(np.eye(3), np.eye(3), ((crandn(rng, 3, 3), exp(1)), (crandn(rng, 3, 3), exp(2))))
    alpha = crandn(rng, 4, 2)
    s1 = build_surrogate(prob, _ra(alpha, [1, 2, 3, 4]))
    s2 = build_surrogate(prob, _ra(2 * alpha, [1, 2, 3, 4]))
    assert np.array_equal(s2.B, 2 * s1.B)


def test_build_surrogate_term_count_mismatch():
    with pytest.raises(DimensionMismatch):
        build_surrogate(make_delay(), _ra(np.zeros((2, 2)), [1, 2]))


def test_delay_surrogate_error_bounded(rng):
    prob = make_delay()
    C = Circle(-1, 6)
    ra = build_rational_approx(quadrature_rule(C, 50), prob.functions)
    s = build_surrogate(prob, ra)
    e = approx_error(ra, prob.functions[0], Circle(-1, 3), term=0)
    A1max = np.max(np.abs(prob.matrices[0]))
    z = -1 + 3 * np.sqrt(rng.uniform(0, 1, 20)) * np.exp(2j * np.pi * rng.uniform(0, 1, 20))
    for zk in z:
        assert np.max(np.abs(evaluate_surrogate(s, zk) - evaluate_T(prob, zk))) <= A1max * e * (1 + 1e-6)


def test_evaluate_surrogate_examples(rng):
    B0, A0 = crandn(rng, 2, 2), crandn(rng, 2, 2)
    s = Surrogate(B0, A0, np.array([1.0 + 0j]), np.zeros((1, 2, 2), complex))
    np.testing.assert_allclose(evaluate_surrogate(s, 0.5j), -B0 + 0.5j * A0)
    s = Surrogate(np.zeros((2, 2)), np.zeros((2, 2)), np.array([0j]), np.eye(2)[None].astype(complex))
    np.testing.assert_allclose(evaluate_surrogate(s, 2), np.eye(2) / 2)
    with pytest.raises(AtPole):
        evaluate_surrogate(s, 0)


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 4), st.integers(0, 6), st.integers(0, 2**31))
def test_surrogate_equals_minus_schur(n, m, seed):
    rng = np.random.default_rng(seed)
    s = random_surrogate(rng, n, m)
    z = complex(*rng.uniform(-3, 3, 2))
    if m and np.min(np.abs(s.poles - z)) < 1e-3:
        return
    T = evaluate_surrogate(s, z)
    assert np.max(np.abs(T + schur_matrix(s, z))) <= 1e-13 * s.scale(z)


@pytest.mark.parametrize("name", ["delay", "fem", "hadeler-ellipse", "quadratic"])
def test_approximation_transfer(name, rng):
    ex = EXPERIMENTS[name]
    params = dict(ex["params"])
    if name.startswith("hadeler"):
        params["n"] = 20
    prob = make_problem(ex.get("problem", name), **params)
    C = ex["contour"]
    ra = build_rational_approx(quadrature_rule(C, ex["m"], per_side=ex.get("per_side", False)), prob.functions)
    s = build_surrogate(prob, ra)
    inner = C.scaled(0.5)
    eps = max(approx_error(ra, f, inner, term=j) for j, f in enumerate(prob.functions))
    mu = sum(np.linalg.norm(A, 2) for A in prob.matrices)
    lo, hi = inner.bounding_box()
    found = 0
    while found < 50:
        z = complex(rng.uniform(lo.real, hi.real), rng.uniform(lo.imag, hi.imag))
        if not is_inside(inner, z) or (name == "fem" and abs(z - 1) < 1e-3):
            continue
        found += 1
        diff = np.linalg.norm(evaluate_T(prob, z) - evaluate_surrogate(s, z), 2)
        assert diff <= mu * eps * (1 + 1e-6) + 1e-13 * s.scale(z)


def test_residual_norm_exact_pencil():
    prob = SplitProblem(np.diag([1.0, 2.0]), np.eye(2))
    assert residual_norm(prob, 2.0, np.array([0, 3.0])) <= 1e-14


def test_residual_norm_normalizes(rng):
    prob = make_delay()
    lam, u = complex(*rng.standard_normal(2)), crandn(rng, 2)
    ref = np.linalg.norm(evaluate_T(prob, lam) @ u) / np.linalg.norm(u)
    assert np.isclose(residual_norm(prob, lam, u), ref, rtol=1e-14)


def test_scaled_residual_sum_examples():
    prob = SplitProblem(np.diag([1.0, 2.0]), np.eye(2))
    assert scaled_residual_sum(prob, [(1.0, np.array([1, 0])), (2.0, np.array([0, 1]))]) <= 1e-15
    # B0 = 0, A0 = I: ||T(lam) u|| = |lam| and gamma = |lam|
    prob = SplitProblem(np.zeros((2, 2)), np.eye(2))
    assert np.isclose(scaled_residual_sum(prob, [(3.0, np.array([1, 0]))]), 1.0)
    with pytest.raises(ValueError):
        scaled_residual_sum(prob, [])


def test_scaled_residual_sum_with_surrogate():
    prob = make_delay()
    ra = build_rational_approx(quadrature_rule(Circle(-1, 6), 50), prob.functions)
    s = build_surrogate(prob, ra)
    u = np.array([1.0, 1.0])
    a = scaled_residual_sum(prob, [(0.1, u)], use_exact_f=False, surrogate=s)
    b = scaled_residual_sum(prob, [(0.1, u)])
    assert np.isclose(a, b, rtol=1e-6)
    with pytest.raises(ValueError):
        scaled_residual_sum(prob, [(0.1, u)], use_exact_f=False, surrogate=linear_surrogate(np.eye(2), np.eye(2)))

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import crandn, random_surrogate
from ratnlevp.contour import Circle, build_rational_approx, quadrature_rule
from ratnlevp.errors import AtPole, DimensionMismatch
from ratnlevp.gallery import make_delay
from ratnlevp.linop import (BlockVector, apply_A, apply_M, apply_shift_invert, factor_shifted,
                            lift_eigvec, materialize, schur_matrix, solve_shifted)
from ratnlevp.nlevp import Surrogate, build_surrogate, evaluate_surrogate, linear_surrogate


def _random_bv(rng, m, n, k=None):
    tail = () if k is None else (k,)
    return BlockVector(crandn(rng, m, n, *tail), crandn(rng, n, *tail))


def _delay_surrogate(m=50):
    prob = make_delay()
    return build_surrogate(prob, build_rational_approx(quadrature_rule(Circle(-1, 6), m), prob.functions))


def test_block_vector_flat_round_trip(rng):
    w = _random_bv(rng, 3, 2)
    x = w.flat()
    assert x.shape == (8,)
    back = BlockVector.from_flat(x, 3, 2)
    np.testing.assert_array_equal(back.v, w.v)
    np.testing.assert_array_equal(back.u, w.u)
    with pytest.raises(DimensionMismatch):
        BlockVector(np.zeros((2, 3)), np.zeros(2))


def test_schur_examples(rng):
    B0 = crandn(rng, 2, 2)
    s = linear_surrogate(B0, np.eye(2))
    np.testing.assert_allclose(schur_matrix(s, 1j), B0 - 1j * np.eye(2))
    s = Surrogate(np.zeros((2, 2)), np.zeros((2, 2)), np.array([1.0 + 0j]), np.eye(2)[None].astype(complex))
    np.testing.assert_allclose(schur_matrix(s, 0), np.eye(2))


def test_schur_equals_minus_surrogate_delay(rng):
    s = _delay_surrogate()
    for z in -1 + 4 * crandn(rng, 5) / 2:
        np.testing.assert_allclose(schur_matrix(s, z), -evaluate_surrogate(s, z), atol=1e-12 * s.scale(z))


def test_factor_shifted_examples():
    fac = factor_shifted(linear_surrogate(np.eye(3), np.eye(3)), 0)
    np.testing.assert_allclose(fac.solve(np.arange(3.0)), np.arange(3.0))
    s = _delay_surrogate()
    fac = factor_shifted(s, -1)
    w = BlockVector(np.ones((s.m, 2)), np.ones(2))
    x = solve_shifted(fac, s, w)
    r = apply_A(s, x).flat() + 1 * apply_M(s, x).flat() - w.flat()
    assert np.linalg.norm(r) <= 1e-12 * np.linalg.norm(w.flat())
    with pytest.raises(AtPole):
        factor_shifted(s, s.poles[0])


def test_shift_invert_decoupled_case(rng):
    # B_i = 0, A0 = I, B0 = diag(d), sigma = 0
    m, n = 2, 3
    d = np.array([1.0, 2.0, 4.0])
    poles = np.array([1.0 + 1j, -2.0 + 0j])
    s = Surrogate(np.diag(d), np.eye(n), poles, np.zeros((m, n, n), complex))
    w = _random_bv(rng, m, n)
    x = apply_shift_invert(factor_shifted(s, 0), s, w)
    np.testing.assert_allclose(x.u, w.u / d)
    # top rows read s_i x_i - x_u = v_i, hence the plus sign
    np.testing.assert_allclose(x.v, (w.v + x.u[None]) / poles[:, None])


def test_apply_A_with_zero_top(rng):
    s = random_surrogate(rng, 3, 4)
    w = BlockVector(np.zeros((4, 3)), crandn(rng, 3))
    out = apply_A(s, w)
    np.testing.assert_allclose(out.v, -np.tile(w.u, (4, 1)))
    np.testing.assert_allclose(out.u, s.B0 @ w.u)


def test_apply_M_examples(rng):
    s = random_surrogate(rng, 2, 3, identity_A0=True)
    w = _random_bv(rng, 3, 2)
    np.testing.assert_allclose(apply_M(s, w).flat(), w.flat())
    s2 = Surrogate(s.B0, 2 * np.eye(2), s.poles, s.B)
    w = BlockVector(np.zeros((3, 2)), crandn(rng, 2))
    np.testing.assert_allclose(apply_M(s2, w).u, 2 * w.u)


def test_materialized_tiny_instance(rng):
    s = random_surrogate(rng, 2, 1)
    A, M = materialize(s)
    assert A.shape == (4, 4)
    w = _random_bv(rng, 1, 2)
    np.testing.assert_allclose(apply_A(s, w).flat(), A @ w.flat(), atol=1e-13)
    np.testing.assert_allclose(apply_M(s, w).flat(), M @ w.flat(), atol=1e-13)


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 3), st.integers(1, 4), st.integers(0, 2**31))
def test_materialization_equivalence(n, m, seed):
    rng = np.random.default_rng(seed)
    s = random_surrogate(rng, n, m)
    A, M = materialize(s)
    w = _random_bv(rng, m, n)
    x = w.flat()
    nA = np.linalg.norm(A, 2)
    assert np.linalg.norm(apply_A(s, w).flat() - A @ x) <= 1e-11 * nA * np.linalg.norm(x)
    assert np.linalg.norm(apply_M(s, w).flat() - M @ x) <= 1e-11 * np.linalg.norm(M, 2) * np.linalg.norm(x)
    sigma = 0.3 + 0.2j
    ref = np.linalg.solve(A - sigma * M, M @ x)
    got = apply_shift_invert(factor_shifted(s, sigma), s, w).flat()
    assert np.linalg.norm(got - ref) <= 1e-11 * np.linalg.norm(ref) * np.linalg.cond(A - sigma * M)


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 6), st.integers(0, 8), st.integers(1, 3), st.integers(0, 2**31))
def test_shift_invert_residual(n, m, k, seed):
    rng = np.random.default_rng(seed)
    s = random_surrogate(rng, n, m)
    sigma = complex(*rng.uniform(-0.5, 0.5, 2))
    w = _random_bv(rng, m, n, k)
    x = apply_shift_invert(factor_shifted(s, sigma), s, w)
    r = apply_A(s, x).flat() - sigma * apply_M(s, x).flat() - apply_M(s, w).flat()
    scale = np.linalg.norm(materialize(s)[0], 2) + abs(sigma) * np.linalg.norm(s.A0, 2) + 1
    assert np.max(np.linalg.norm(r, axis=0) / np.linalg.norm(w.flat(), axis=0)) <= 1e-10 * scale


@settings(max_examples=15, deadline=None)
@given(st.integers(1, 3), st.integers(1, 4), st.integers(0, 2**31))
def test_spectral_mapping(n, m, seed):
    rng = np.random.default_rng(seed)
    s = random_surrogate(rng, n, m)
    A, M = materialize(s)
    sigma = 0.1 + 0.05j
    fac = factor_shifted(s, sigma)
    N = (m + 1) * n
    H = np.column_stack([apply_shift_invert(fac, s, BlockVector.from_flat(e, m, n)).flat()
                         for e in np.eye(N)])
    theta = np.linalg.eigvals(H)
    theta = theta[np.abs(theta) > 1e-8]
    lam = sigma + 1 / theta
    ref = np.linalg.eigvals(np.linalg.solve(M, A))
    for z in lam:
        assert np.min(np.abs(ref - z)) <= 1e-7 * max(1, abs(z))


def test_lift_examples():
    s = Surrogate(np.zeros((2, 2)), np.eye(2), np.array([1.0 + 0j]), np.zeros((1, 2, 2), complex))
    w = lift_eigvec(s, 0, np.array([1.0, 0.0]))
    np.testing.assert_allclose(w.v[0], [1, 0])
    with pytest.raises(AtPole):
        lift_eigvec(s, 1.0 + 1e-14, np.array([1.0, 0.0]))


def test_lifted_eigenpair_and_fixed_point(rng):
    s = random_surrogate(rng, 3, 4)
    A, M = materialize(s)
    lams, X = np.linalg.eig(np.linalg.solve(M, A))
    i = int(np.argmin(np.abs(lams)))
    lam = lams[i]
    u = X[s.m * s.n:, i]
    w = lift_eigvec(s, lam, u / np.linalg.norm(u))
    r = apply_A(s, w).flat() - lam * apply_M(s, w).flat()
    assert np.linalg.norm(r) <= 1e-11 * np.linalg.norm(A, 2) * np.linalg.norm(w.flat())
    sigma = 0.05
    x = apply_shift_invert(factor_shifted(s, sigma), s, w)
    np.testing.assert_allclose(x.flat(), w.flat() / (lam - sigma), atol=1e-9 * np.linalg.norm(w.flat()) / abs(lam - sigma))

import numpy as np
import pytest

from ratnlevp.errors import ParseError, UnknownFunctionDescriptor
from ratnlevp.functions import poly
from ratnlevp.gallery import (EXPERIMENTS, hadeler_matrices, load_problem, make_delay,
                              make_exact_fem_linearization, make_fem_string, make_hadeler,
                              make_problem, make_quadratic_halo, read_matrix, reference_eigenvalues,
                              save_problem, write_matrix)
from ratnlevp.linalg import dense_geig
from ratnlevp.nlevp import SplitProblem, evaluate_T


def test_delay_matrices():
    prob = make_delay()
    np.testing.assert_array_equal(prob.B0, [[-5, 1], [2, -6]])
    np.testing.assert_array_equal(prob.matrices[0], [[2, -1], [-4, 1]])
    np.testing.assert_array_equal(prob.A0, np.eye(2))
    assert prob.functions[0](0) == 1
    with pytest.raises(ValueError):
        make_delay(0)


def test_fem_matrices_n3():
    prob = make_fem_string(3)
    np.testing.assert_allclose(-prob.B0, 3 * np.array([[2, -1, 0], [-1, 2, -1], [0, -1, 1]]))
    np.testing.assert_allclose(prob.A0, -np.array([[4, 1, 0], [1, 4, 1], [0, 1, 2]]) / 18)
    np.testing.assert_array_equal(prob.matrices[0], np.diag([0, 0, 1]))
    assert np.isclose(prob.functions[0](3.0), -0.5)


def test_exact_fem_linearization_n2():
    A, M = make_exact_fem_linearization(2)
    K = 2 * np.array([[2.0, -1.0], [-1.0, 1.0]])
    A0 = -np.array([[4.0, 1.0], [1.0, 2.0]]) / 12
    np.testing.assert_allclose(A, [[1, 0, -1, 0], [0, 1, 0, -1], [0, 0, K[0, 0], K[0, 1]],
                                   [0, 1, K[1, 0], K[1, 1]]])
    np.testing.assert_allclose(M[:2, :2], np.eye(2))
    np.testing.assert_allclose(M[2:, 2:], -A0)
    assert not np.any(M[:2, 2:]) and not np.any(M[2:, :2])


def test_exact_fem_linearization_eigenpairs_solve_T():
    n = 20
    prob = make_fem_string(n)
    w, X = dense_geig(*make_exact_fem_linearization(n))
    ok = np.isfinite(w) & (np.abs(w - 1) > 1e-6)
    for lam, x in zip(w[ok], X[:, ok].T):
        u = x[n:]
        assert np.linalg.norm(evaluate_T(prob, lam) @ u) <= 1e-8 * (1 + abs(lam)) * np.linalg.norm(u) * n


def test_fem_reference_interior_count():
    ref = reference_eigenvalues(make_fem_string(100))
    inside = ref[np.abs(ref - 150) < 150]
    assert len(inside) >= 5
    assert np.min(np.abs(ref - 1)) > 1e-6


def test_hadeler_n2():
    B1, B2, B0 = hadeler_matrices(2, 100.0)
    np.testing.assert_array_equal(B1, [[2, 2], [2, 4]])
    np.testing.assert_allclose(B2, [[2 + 1 / 2, 1 / 3], [1 / 3, 2 + 1 / 4]])
    prob = make_hadeler(2)
    assert not prob.has_invertible_A0
    assert np.isclose(prob.functions[0](1.0), np.e - 1)
    with pytest.raises(ValueError):
        make_hadeler(2, b0=-1)


def _matlab_lines(n):
    # B0 = -2*eye(n)+diag(ones(n-1,1),1)+diag(ones(n-1,1),-1)
    B0 = [[-2.0 if i == j else (1.0 if abs(i - j) == 1 else 0.0) for j in range(n)] for i in range(n)]
    # eye(n,1)*ones(1,n) has ones in its first row, ones(n,1)*eye(1,n) in its first column
    A2 = [[0.5 * ((n if i == j else 0) - (1 if i == 0 else 0) - (1 if j == 0 else 0))
           for j in range(n)] for i in range(n)]
    return np.array(B0), np.eye(n), np.array(A2)


@pytest.mark.parametrize("n", [2, 4, 7])
def test_quadratic_literal_transcription(n):
    prob = make_quadratic_halo(n)
    B0, A0, A2 = _matlab_lines(n)
    np.testing.assert_array_equal(prob.B0, B0)
    np.testing.assert_array_equal(prob.A0, A0)
    np.testing.assert_array_equal(prob.matrices[0], A2)


def test_quadratic_examples():
    prob = make_quadratic_halo(4)
    np.testing.assert_array_equal(prob.B0[0], [-2, 1, 0, 0])
    assert prob.matrices[0][0, 0] == 1.0
    ref = reference_eigenvalues(prob)
    assert len(ref) == 8
    assert np.all((ref.real > -1) & (ref.real < 0) & (np.abs(ref.imag) < 1.5))


def test_constructors_are_deterministic():
    for name in ("delay", "fem", "quadratic"):
        a, b = make_problem(name), make_problem(name)
        assert np.array_equal(a.B0, b.B0) and all(np.array_equal(x, y) for x, y in zip(a.matrices, b.matrices))
    with pytest.raises(KeyError):
        make_problem("butterfly")


def test_experiment_table():
    assert EXPERIMENTS["delay"]["m"] == 50 and EXPERIMENTS["fem"]["m"] == 6
    assert EXPERIMENTS["hadeler"]["expected"] == 12


def test_save_load_round_trip(tmp_path):
    prob = make_delay()
    save_problem(prob, tmp_path / "delay")
    back = load_problem(tmp_path / "delay")
    assert np.array_equal(back.B0, prob.B0) and np.array_equal(back.A0, prob.A0)
    assert np.array_equal(back.matrices[0], prob.matrices[0])
    assert back.functions[0].descriptor == "exp(-1)"
    assert back.n == 2 and back.p == 1


def test_matrix_file_precision(tmp_path, rng):
    A = rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2))
    write_matrix(tmp_path / "A.txt", A)
    assert np.array_equal(read_matrix(tmp_path / "A.txt"), A)


def test_parse_errors(tmp_path):
    p = tmp_path / "bad.txt"
    p.write_text("2 x\n1 0\n")
    with pytest.raises(ParseError, match="bad.txt:1"):
        read_matrix(p)
    p.write_text("1 1\n1 2 3\n")
    with pytest.raises(ParseError, match="bad.txt:2"):
        read_matrix(p)
    p.write_text("2 2\n1 0\n")
    with pytest.raises(ParseError, match="expected 4 entries"):
        read_matrix(p)
    with pytest.raises(ParseError):
        load_problem(tmp_path / "missing")


def test_manifest_errors(tmp_path):
    save_problem(make_delay(), tmp_path)
    man = tmp_path / "problem.json"
    man.write_text(man.read_text().replace("exp(-1)", "sin(1)"))
    with pytest.raises(UnknownFunctionDescriptor):
        load_problem(tmp_path)
    man.write_text("{not json")
    with pytest.raises(ParseError, match="problem.json:1"):
        load_problem(tmp_path)


def test_poly4_descriptor_through_files(tmp_path):
    prob = SplitProblem(np.eye(2), np.eye(2), ((np.eye(2), poly(4)),))
    save_problem(prob, tmp_path)
    back = load_problem(tmp_path / "problem.json")
    assert back.functions[0](2.0) == 16


def test_unsaveable_callable(tmp_path):
    prob = SplitProblem(np.eye(2), np.eye(2), ((np.eye(2), lambda z: z),))
    with pytest.raises(UnknownFunctionDescriptor):
        save_problem(prob, tmp_path)

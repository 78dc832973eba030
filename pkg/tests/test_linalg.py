import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from smoothsc.linalg import (LinalgError, cdot, exact_solve, finalize, lambda_max, read_matrix_market, spmv,
                             tri_solve, write_matrix_market)


def tridiag(n):
    return finalize(sp.diags([-np.ones(n - 1), 2 * np.ones(n), -np.ones(n - 1)], [-1, 0, 1]))


def test_spmv_examples():
    x = np.array([3.0, -1.0])
    assert np.array_equal(spmv(sp.identity(2, format="csr"), x), x)
    A = finalize(np.array([[2.0, -1], [-1, 2]]))
    assert np.array_equal(spmv(A, np.ones(2)), np.ones(2))
    assert np.array_equal(spmv(A, np.zeros(2)), np.zeros(2))
    with pytest.raises(LinalgError):
        spmv(A, np.ones(3))


def test_finalize_invariants():
    A = finalize(sp.coo_matrix(([1.0, 0.0, 2.0, 3.0], ([0, 0, 1, 0], [1, 0, 0, 1])), shape=(2, 2)))
    assert A.nnz == 2 and A[0, 1] == 4.0
    for i in range(2):
        cols = A.indices[A.indptr[i]:A.indptr[i + 1]]
        assert np.all(np.diff(cols) > 0)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_transpose_consistency(seed):
    rng = np.random.default_rng(seed)
    A = finalize(sp.random(12, 9, density=0.3, random_state=seed))
    x, y = rng.standard_normal(9), rng.standard_normal(12)
    lhs, rhs = cdot(A @ x, y), cdot(x, A.T @ y)
    assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs))


def test_cdot_conjugates_second_argument():
    assert cdot(np.array([1j]), np.array([1j])) == pytest.approx(1.0)
    assert cdot(np.array([1.0]), np.array([1j])) == pytest.approx(-1j)


def test_tri_solve_examples():
    D = finalize(sp.diags([2.0, 4.0, 5.0]))
    b = np.array([2.0, 2.0, 10.0])
    assert np.allclose(tri_solve(D, "lower_incl_diag", b), [1, 0.5, 2])
    L = finalize(np.array([[2.0, 0], [-1, 2]]))
    assert np.allclose(tri_solve(L, "lower_incl_diag", np.array([2.0, 1.0])), [1, 1])
    with pytest.raises(LinalgError, match="row 1"):
        tri_solve(finalize(np.array([[1.0, 0], [1, 0]])), "lower_incl_diag", np.ones(2))


def test_tri_solve_uses_only_its_part():
    rng = np.random.default_rng(0)
    M = rng.standard_normal((6, 6)) + 6 * np.eye(6)
    b = rng.standard_normal(6)
    A = finalize(M)
    assert np.allclose(tri_solve(A, "lower_incl_diag", b), np.linalg.solve(np.tril(M), b))
    assert np.allclose(tri_solve(A, "upper_incl_diag", b), np.linalg.solve(np.triu(M), b))
    # upper solve with A^T is the transpose of the lower solve with A
    At = finalize(M.T)
    assert np.allclose(tri_solve(At, "upper_incl_diag", b), np.linalg.solve(np.tril(M).T, b))


def test_exact_solve_examples():
    A = tridiag(3)
    assert np.allclose(exact_solve(A, np.ones(3)), [1.5, 2.0, 1.5], rtol=1e-12)
    assert np.array_equal(exact_solve(A, np.zeros(3)), np.zeros(3))
    b = np.arange(1.0, 5.0)
    assert np.allclose(exact_solve(sp.identity(4, format="csr"), b), b)


def test_exact_solve_complex_symmetric():
    rng = np.random.default_rng(1)
    n = 40
    A = tridiag(n).astype(complex) + sp.diags(0.3j * rng.random(n))
    b = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    x = exact_solve(A, b)
    assert np.linalg.norm(b - A @ x) <= 1e-12 * np.linalg.norm(b)


def test_lambda_max_examples():
    A = tridiag(20)
    lam = lambda_max(lambda r: r / 2.0, A, iters=200)
    assert lam == pytest.approx(1 - np.cos(20 * np.pi / 21), abs=1e-3)
    assert lambda_max(lambda r: exact_solve(A, r), A, iters=5) == pytest.approx(1.0, abs=1e-8)
    with pytest.raises(LinalgError):
        lambda_max(lambda r: r, A, x0=np.zeros(20))


def test_lambda_max_monotone():
    A = tridiag(30)
    vals = [lambda_max(lambda r: r / 2.0, A, iters=k, seed=4) for k in range(1, 30)]
    assert np.all(np.diff(vals) >= -1e-12)


def test_matrix_market_roundtrip(tmp_path):
    A = tridiag(7)
    write_matrix_market(tmp_path / "a.mtx", A)
    B = read_matrix_market(tmp_path / "a.mtx")
    assert (abs(A - B)).max() == 0

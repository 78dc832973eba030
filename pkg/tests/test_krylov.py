import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from smoothsc.krylov import KrylovError, gmres, pcg
from smoothsc.linalg import finalize
from smoothsc.postprocess import fixed_point


def tridiag(n):
    return finalize(sp.diags([-np.ones(n - 1), 2 * np.ones(n), -np.ones(n - 1)], [-1, 0, 1]))


def ident(r):
    return np.array(r, copy=True)


def test_identity_one_step():
    b = np.array([1.0, -2.0, 3.0])
    x, tr = pcg(sp.identity(3, format="csr"), b, ident, np.zeros(3), 1)
    assert np.array_equal(x, b)
    assert len(tr.precond_residual) == 2


def test_finite_termination():
    A = tridiag(8)
    b = np.arange(1.0, 9.0)
    x, tr = pcg(A, b, ident, np.zeros(8), 8)
    assert np.linalg.norm(b - A @ x) <= 1e-10 * np.linalg.norm(b)


def test_early_stop_flag():
    A = sp.identity(4, format="csr")
    x, tr = pcg(A, np.ones(4), ident, np.zeros(4), 5)
    assert tr.stopped_early and np.allclose(x, 1.0)


def test_breakdown_reported():
    A = finalize(np.diag([1.0, -1.0]))
    with pytest.raises(KrylovError, match="iteration 1"):
        pcg(A, np.array([0.0, 1.0]), ident, np.zeros(2), 2)


def random_spd(n, seed):
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    return finalize(Q @ np.diag(rng.uniform(0.05, 1.0, n)) @ Q.T)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_pcg_beats_fixed_point(seed):
    n = 30
    A = random_spd(n, seed)
    rng = np.random.default_rng(seed + 1)
    b = rng.standard_normal(n)
    xs = np.linalg.solve(A.toarray(), b)
    d = A.diagonal()

    def S(r):
        return r / d * 0.5

    _, tr = pcg(A, b, S, np.zeros(n), 10, x_ref=xs)
    _, fp = fixed_point(A, b, S, np.zeros(n), 10, x_ref=xs)
    e = np.array(tr.energy_error)
    assert np.all(np.diff(e) <= 1e-12 * e[0])
    assert np.all(e <= np.array(fp) * (1 + 1e-10))


def test_residuals_s_orthogonal():
    n = 25
    A = random_spd(n, 3)
    d = A.diagonal()
    b = np.random.default_rng(0).standard_normal(n)
    # rebuild residuals from iterates
    _, tr = pcg(A, b, lambda r: r / d, np.zeros(n), 8, keep_iterates=True)
    R = np.array([b - A @ x for x in tr.iterates])
    Z = R / d
    G = R @ Z.T
    off = G - np.diag(np.diag(G))
    assert np.max(np.abs(off)) <= 1e-8 * np.max(np.abs(np.diag(G)))


def test_gmres_identity_and_complex():
    b = np.array([1.0, 2.0, 3.0])
    x, tr = gmres(sp.identity(3, format="csr"), b, ident, np.zeros(3), 3)
    assert np.allclose(x, b) and tr.stopped_early
    A = sp.csr_matrix(np.array([[1j, 0], [0, 2]]))
    x, _ = gmres(A, np.array([1j, 2.0]), ident, np.zeros(2, dtype=complex), 2)
    assert np.allclose(x, [1, 1], atol=1e-14)


def test_gmres_matches_cg_solution():
    A = tridiag(10)
    b = np.random.default_rng(2).standard_normal(10)
    xg, _ = gmres(A, b, ident, np.zeros(10), 10)
    xc, _ = pcg(A, b, ident, np.zeros(10), 10)
    assert np.allclose(xg, xc, atol=1e-8)


def test_gmres_residual_monotone_and_restart():
    rng = np.random.default_rng(5)
    n = 30
    A = finalize(tridiag(n) + sp.diags(0.5j * rng.random(n)))
    b = rng.standard_normal(n) + 0j
    d = A.diagonal()
    _, tr = gmres(A, b, lambda r: r / d, np.zeros(n, dtype=complex), 12)
    assert np.all(np.diff(tr.precond_residual) <= 1e-12)
    x1, _ = gmres(A, b, lambda r: r / d, np.zeros(n, dtype=complex), 12, restart=4)
    assert np.linalg.norm(b - A @ x1) < np.linalg.norm(b)

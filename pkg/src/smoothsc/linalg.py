"""Sparse kernels, reference solver and the power-iteration spectral estimate.

Matrices are ``scipy.sparse.csr_matrix`` objects with sorted indices and no
stored zeros (see :func:`finalize`). Triangular solves run in compiled loops.
"""
from __future__ import annotations

import numba
import numpy as np
import scipy.io
import scipy.sparse as sp
import scipy.sparse.linalg as spla


class LinalgError(ArithmeticError):
    pass


def finalize(A) -> sp.csr_matrix:
    A = sp.csr_matrix(A)
    A.sum_duplicates()
    A.eliminate_zeros()
    A.sort_indices()
    return A


def spmv(A, x):
    if A.shape[1] != np.shape(x)[0]:
        raise LinalgError(f"dimension mismatch: {A.shape} times {np.shape(x)}")
    return A @ x


def cdot(x, y):
    """Inner product sum x_i conj(y_i)."""
    return np.vdot(y, x)


@numba.njit(cache=True)
def _lower_solve(indptr, indices, data, b, out):
    n = b.shape[0]
    for i in range(n):
        s = b[i]
        d = 0.0 * data[0]
        for p in range(indptr[i], indptr[i + 1]):
            j = indices[p]
            if j < i:
                s -= data[p] * out[j]
            elif j == i:
                d = data[p]
        if d == 0:
            return i
        out[i] = s / d
    return -1


@numba.njit(cache=True)
def _upper_solve(indptr, indices, data, b, out):
    n = b.shape[0]
    for i in range(n - 1, -1, -1):
        s = b[i]
        d = 0.0 * data[0]
        for p in range(indptr[i], indptr[i + 1]):
            j = indices[p]
            if j > i:
                s -= data[p] * out[j]
            elif j == i:
                d = data[p]
        if d == 0:
            return i
        out[i] = s / d
    return -1


def tri_solve(A, part: str, b) -> np.ndarray:
    """Forward (``lower_incl_diag``) or backward (``upper_incl_diag``) substitution."""
    A = sp.csr_matrix(A)
    dtype = np.result_type(A.dtype, np.asarray(b).dtype)
    data = A.data.astype(dtype, copy=False)
    b = np.ascontiguousarray(b, dtype=dtype)
    out = np.zeros_like(b)
    if part == "lower_incl_diag":
        bad = _lower_solve(A.indptr, A.indices, data, b, out)
    elif part == "upper_incl_diag":
        bad = _upper_solve(A.indptr, A.indices, data, b, out)
    else:
        raise ValueError(f"unknown triangular part {part!r}")
    if bad >= 0:
        raise LinalgError(f"zero diagonal entry at row {bad}")
    return out


def exact_solve(A, b, rtol: float = 1e-12) -> np.ndarray:
    """Reference solve: Jacobi-PCG for real SPD, ILU-preconditioned GMRES for complex."""
    b = np.asarray(b)
    n = A.shape[0]
    bnorm = np.linalg.norm(b)
    if bnorm == 0:
        return np.zeros_like(b)
    complex_case = np.iscomplexobj(A) or np.iscomplexobj(b)
    if not complex_case:
        d = A.diagonal()
        if np.any(d <= 0):
            raise LinalgError("nonpositive diagonal in SPD solve")
        M = sp.diags(1.0 / d)

        def inner(r, tol):
            return spla.cg(A, r, rtol=tol, atol=0.0, maxiter=20 * n, M=M)
    else:
        A = sp.csc_matrix(A, dtype=complex)
        ilu = spla.spilu(A, drop_tol=1e-6, fill_factor=20)
        M = spla.LinearOperator(A.shape, ilu.solve, dtype=complex)

        def inner(r, tol):
            return spla.gmres(A, r.astype(complex), rtol=tol, atol=0.0, restart=100, maxiter=20 * n, M=M)

    # restart on the true residual: the recursive Krylov residual drifts on
    # badly conditioned systems (fourth-order problems)
    anorm = spla.norm(A, np.inf)

    def accepted(x, res):
        # relative residual, or the backward-error floor of double precision
        floor = 100 * np.finfo(float).eps * anorm * np.linalg.norm(x, np.inf) / bnorm * np.sqrt(n)
        return res <= max(rtol, floor)

    x = np.zeros_like(b, dtype=np.result_type(b, A.dtype, float))
    res = 1.0
    for _ in range(4):
        dx, info = inner(b - A @ x, max(rtol / res, 1e-8))
        x = x + dx
        new = np.linalg.norm(b - A @ x) / bnorm
        if accepted(x, new):
            return x
        if new > 0.1 * res:
            break
        res = new
    # last resort for systems whose conditioning defeats the iterative path
    x = spla.splu(sp.csc_matrix(A)).solve(b)
    res = np.linalg.norm(b - A @ x) / bnorm
    if not accepted(x, res):
        raise LinalgError(f"reference solve did not converge (residual={res:.2e})")
    return x


def lambda_max(apply_S, A, iters: int = 100, x0=None, seed: int = 0) -> float:
    """Power-iteration estimate of the largest eigenvalue of S A.

    SA is self-adjoint in the A inner product, so the Rayleigh quotient
    a(SAv, v) / a(v, v) increases monotonically toward the top eigenvalue.
    """
    n = A.shape[0]
    v = np.random.default_rng(seed).standard_normal(n) if x0 is None else np.array(x0, dtype=float)
    Av = A @ v
    nrm = np.sqrt(abs(cdot(Av, v)))
    if nrm == 0:
        raise LinalgError("zero start vector")
    v, Av = v / nrm, Av / nrm
    lam = 0.0
    for _ in range(iters):
        w = apply_S(Av)
        Aw = A @ w
        lam = float(np.real(cdot(Aw, v)))
        nrm = np.sqrt(abs(cdot(Aw, w)))
        if nrm == 0:
            break
        v, Av = w / nrm, Aw / nrm
    return lam


def write_matrix_market(path, A, comment: str = ""):
    scipy.io.mmwrite(str(path), sp.coo_matrix(A), comment=comment)


def read_matrix_market(path) -> sp.csr_matrix:
    return finalize(scipy.io.mmread(str(path)))

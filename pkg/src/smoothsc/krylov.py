"""Preconditioned CG with fixed step count, and left-preconditioned GMRES."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import cdot


class KrylovError(ArithmeticError):
    pass


@dataclass
class KrylovTrace:
    energy_error: list = field(default_factory=list)  # ||x* - x_k||_A when x* given
    precond_residual: list = field(default_factory=list)  # <r_k, S r_k>^{1/2} (pcg) or ||M r_k|| (gmres)
    iterates: list = field(default_factory=list)
    stopped_early: bool = False


def _energy(A, e):
    return float(np.sqrt(abs(np.real(cdot(A @ e, e)))))


def pcg(A, b, S, x0, m: int, x_ref=None, keep_iterates: bool = False):
    """m steps of preconditioned CG started from x0.

    The step lengths are alpha = <r, z> / <A p, p> and beta = <r_new, z_new> / <r, z>.
    """
    x = np.array(x0, dtype=np.result_type(x0, b, float), copy=True)
    trace = KrylovTrace()

    def record(x, r, rz):
        if x_ref is not None:
            trace.energy_error.append(_energy(A, x_ref - x))
        trace.precond_residual.append(float(np.sqrt(max(np.real(rz), 0.0))))
        if keep_iterates:
            trace.iterates.append(x.copy())

    r = b - A @ x
    z = S(r)
    p = z.copy()
    rz = cdot(r, z)
    record(x, r, rz)
    for k in range(1, m + 1):
        if abs(rz) < 1e-30:
            trace.stopped_early = True
            break
        Ap = A @ p
        pAp = cdot(Ap, p)
        if np.real(pAp) <= 0:
            raise KrylovError(f"nonpositive curvature <Ap, p> = {pAp} at iteration {k}")
        alpha = rz / pAp
        x = x + alpha * p
        r = r - alpha * Ap
        z = S(r)
        rz_new = cdot(r, z)
        beta = rz_new / rz
        p = z + beta * p
        rz = rz_new
        record(x, r, rz)
    return x, trace


def gmres(A, b, M, x0, m: int, restart: int | None = None, x_ref=None):
    """GMRES minimizing ||M (b - A x)||_2 over x0 + K_m(MA, M r0).

    With ``restart >= m`` (the default) no restart happens.
    """
    restart = m if restart is None else restart
    if restart < 1 and m > 0:
        raise ValueError("restart length must be positive")
    x = np.array(x0, dtype=np.result_type(x0, b, A.dtype, float), copy=True)
    trace = KrylovTrace()
    if x_ref is not None:
        trace.energy_error.append(float(np.linalg.norm(x_ref - x)))
    done = 0
    while done < m:
        steps = min(restart, m - done)
        x, res, happy = _gmres_cycle(A, b, M, x, steps)
        trace.precond_residual.extend(res)
        done += steps
        if happy:
            trace.stopped_early = True
            break
    return x, trace


def _gmres_cycle(A, b, M, x0, k):
    dtype = np.result_type(x0, b, A.dtype, float)
    r = M(b - A @ x0)
    beta = np.linalg.norm(r)
    if beta == 0:
        return x0, [0.0], True
    n = r.size
    V = np.zeros((k + 1, n), dtype=dtype)
    H = np.zeros((k + 1, k), dtype=dtype)
    V[0] = r / beta
    res = [float(beta)]
    happy = False
    j_last = k
    for j in range(k):
        w = M(A @ V[j]).astype(dtype)
        for i in range(j + 1):
            H[i, j] = cdot(w, V[i])
            w = w - H[i, j] * V[i]
        H[j + 1, j] = np.linalg.norm(w)
        e1 = np.zeros(j + 2, dtype=dtype)
        e1[0] = beta
        y, *_ = np.linalg.lstsq(H[:j + 2, :j + 1], e1, rcond=None)
        res.append(float(np.linalg.norm(e1 - H[:j + 2, :j + 1] @ y)))
        if abs(H[j + 1, j]) <= 1e-14 * beta:
            happy = True
            j_last = j + 1
            break
        V[j + 1] = w / H[j + 1, j]
    e1 = np.zeros(j_last + 1, dtype=dtype)
    e1[0] = beta
    y, *_ = np.linalg.lstsq(H[:j_last + 1, :j_last], e1, rcond=None)
    return x0 + V[:j_last].T @ y, res[1:], happy

"""Smoothing-based postprocessing R_m u_h and the smoothing-rate formulas."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse.linalg as spla

from .krylov import gmres, pcg
from .linalg import cdot

METHODS = ("fixed_point", "pcg", "gmres")


class PostprocessError(ValueError):
    pass


@dataclass(frozen=True)
class PostprocessConfig:
    method: str = "pcg"
    m: int = 3

    def __post_init__(self):
        if self.method not in METHODS:
            raise PostprocessError(f"unknown method {self.method!r}")
        if self.m < 0:
            raise PostprocessError("number of smoothing steps must be nonnegative")


def fixed_point(A, b, S, x0, m: int, x_ref=None):
    """u_k = u_{k-1} + S (b - A u_{k-1}), k = 1..m."""
    x = np.array(x0, copy=True)
    errs = []
    for k in range(m + 1):
        if x_ref is not None:
            e = x_ref - x
            errs.append(float(np.sqrt(abs(np.real(cdot(A @ e, e))))))
        if k == m:
            break
        x = x + S(b - A @ x)
    return x, errs


def smooth_postprocess(u_h, cfg: PostprocessConfig, A_t, f_t, iota, S):
    """R_m u_h: start from iota u_h and run ``cfg.m`` smoothing iterations.

    ``u_h`` and ``f_t`` are reduced (free-dof) vectors; ``iota`` maps reduced
    coarse vectors to reduced enriched vectors.
    """
    x0 = iota @ u_h
    if cfg.m == 0:
        return x0
    if cfg.method == "fixed_point":
        return fixed_point(A_t, f_t, S, x0, cfg.m)[0]
    if cfg.method == "pcg":
        return pcg(A_t, f_t, S, x0, cfg.m)[0]
    return gmres(A_t, f_t, S, x0, cfg.m)[0]


def f_factor(alpha: float, beta: float) -> float:
    """alpha^alpha beta^beta / (alpha + beta)^(alpha + beta), with 0^0 = 1."""
    if alpha < 0 or beta < 0:
        raise PostprocessError("f_factor needs nonnegative arguments")
    if alpha + beta == 0:
        return 1.0

    def xlogx(t):
        return 0.0 if t == 0 else t * math.log(t)

    return math.exp(xlogx(alpha) + xlogx(beta) - xlogx(alpha + beta))


def epsilon_fixed(m: int, delta: float) -> float:
    """Contraction bound of m fixed-point smoothing steps."""
    if not delta > 1:
        raise PostprocessError("delta must exceed 1")
    if m < 0:
        raise PostprocessError("m must be nonnegative")
    if m <= (delta - 1) / 2:
        return ((delta - 1) / delta) ** m
    return math.sqrt(delta) * f_factor(m, 0.5)


def epsilon_pcg(m: int, lam: float, delta: float) -> float:
    if lam <= 0 or delta <= 0:
        raise PostprocessError("lambda and delta must be positive")
    return math.sqrt(lam * delta) / (2 * m + 1)


def energy_norm(A, v) -> float:
    return float(np.sqrt(abs(np.real(cdot(A @ v, v)))))


def smoothing_decay(A_t, f_t, x0, S, method: str, K: int, x_ref):
    """Energy-error ratios ||x_ref - u_k||_A / ||x_ref - u_0||_A for k = 0..K."""
    if method == "fixed_point":
        errs = fixed_point(A_t, f_t, S, x0, K, x_ref=x_ref)[1]
    elif method == "pcg":
        errs = pcg(A_t, f_t, S, x0, K, x_ref=x_ref)[1].energy_error
        errs = errs + [errs[-1]] * (K + 1 - len(errs))
    else:
        raise PostprocessError("decay curves are defined for fixed_point and pcg")
    e0 = errs[0]
    return np.array(errs) / e0 if e0 > 0 else np.zeros(len(errs))


def s_inverse_norm(S, v, rtol: float = 1e-10) -> float:
    """||v||_{S^{-1}} via CG with S as the operator."""
    n = v.size
    op = spla.LinearOperator((n, n), matvec=S, dtype=float)
    w, info = spla.cg(op, v, rtol=rtol, atol=0.0, maxiter=10 * n)
    if info != 0:
        raise PostprocessError("CG on the smoother did not converge")
    return float(np.sqrt(max(np.dot(v, w), 0.0)))


def measured_delta(A_t, S, diff) -> float:
    """delta_hat = ||diff||^2_{S^{-1}} / ||diff||^2_A."""
    return s_inverse_norm(S, diff) ** 2 / energy_norm(A_t, diff) ** 2

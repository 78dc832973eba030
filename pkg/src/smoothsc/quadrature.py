"""Quadrature rules on reference simplices.

The reference simplex has vertices 0, e_1, ..., e_d. Low degrees use the
classical symmetric rules; higher degrees use collapsed (Duffy) products of
Gauss-Jacobi rules, which have positive weights and any exactness degree.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import ceil

import numpy as np
from scipy.special import roots_jacobi

MAX_DEGREE = {1: 40, 2: 14, 3: 10}


class QuadratureError(ValueError):
    pass


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray  # (nq, d) cartesian reference coordinates
    weights: np.ndarray  # (nq,)
    degree: int

    @property
    def barycentric(self) -> np.ndarray:
        return np.hstack([1.0 - self.points.sum(axis=1, keepdims=True), self.points])


def _gauss_jacobi01(n: int, alpha: float):
    """n-point rule on [0, 1] for the weight (1 - s)**alpha."""
    x, w = roots_jacobi(n, alpha, 0.0)
    return 0.5 * (x + 1.0), w * 0.5 ** (alpha + 1)


@lru_cache(maxsize=None)
def make_quadrature(dim: int, degree: int) -> QuadratureRule:
    if dim not in MAX_DEGREE or degree < 0 or degree > MAX_DEGREE[dim]:
        raise QuadratureError(f"no rule for dim={dim}, degree={degree}")
    degree = max(degree, 1)
    if dim == 2 and degree == 1:
        return QuadratureRule(np.array([[1 / 3, 1 / 3]]), np.array([0.5]), 1)
    if dim == 2 and degree == 2:
        p = np.array([[1 / 6, 1 / 6], [2 / 3, 1 / 6], [1 / 6, 2 / 3]])
        return QuadratureRule(p, np.full(3, 1 / 6), 2)
    if dim == 3 and degree == 1:
        return QuadratureRule(np.array([[0.25, 0.25, 0.25]]), np.array([1 / 6]), 1)
    if dim == 3 and degree == 2:
        a, b = 0.1381966011250105, 0.5854101966249685
        p = np.array([[a, a, a], [b, a, a], [a, b, a], [a, a, b]])
        return QuadratureRule(p, np.full(4, 1 / 24), 2)

    n = ceil((degree + 1) / 2)
    if dim == 1:
        s, w = _gauss_jacobi01(n, 0.0)
        return QuadratureRule(s[:, None], w, degree)
    if dim == 2:
        s, ws = _gauss_jacobi01(n, 1.0)
        t, wt = _gauss_jacobi01(n, 0.0)
        S, T = np.meshgrid(s, t, indexing="ij")
        pts = np.stack([S.ravel(), (T * (1 - S)).ravel()], axis=1)
        return QuadratureRule(pts, np.outer(ws, wt).ravel(), degree)
    s, ws = _gauss_jacobi01(n, 2.0)
    t, wt = _gauss_jacobi01(n, 1.0)
    r, wr = _gauss_jacobi01(n, 0.0)
    S, T, R = np.meshgrid(s, t, r, indexing="ij")
    pts = np.stack([S.ravel(), (T * (1 - S)).ravel(), (R * (1 - S) * (1 - T)).ravel()], axis=1)
    w = (ws[:, None, None] * wt[None, :, None] * wr[None, None, :]).ravel()
    return QuadratureRule(pts, w, degree)


def gauss_segment(degree: int) -> QuadratureRule:
    """Rule on [0, 1] exact to ``degree``."""
    return make_quadrature(1, degree)

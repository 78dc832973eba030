"""Manufactured solutions and source terms of the model problems.

Every callable takes points of shape ``(n, d)``; values are ``(n,)`` for
scalars, ``(n, d)`` for gradients and vector fields, ``(n, d, d)`` for
Hessians.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

PI = np.pi
SQ3 = np.sqrt(3.0)


@dataclass(frozen=True)
class Exact:
    value: Callable
    f: Callable
    grad: Optional[Callable] = None
    hess: Optional[Callable] = None
    curl: Optional[Callable] = None
    g: Optional[Callable] = None  # Robin data g(x, n)


# -- hexagon Poisson: u = prod_i (3 - (a_i . x)^2) -------------------------

_HEX_A = np.array([[2.0, 0.0], [1.0, SQ3], [1.0, -SQ3]])


def _hex_parts(x):
    s = x @ _HEX_A.T  # (n, 3)
    p = 3.0 - s**2
    dp = -2.0 * s[:, :, None] * _HEX_A[None]  # (n, 3, 2)
    hp = -2.0 * np.einsum("ia,ib->iab", _HEX_A, _HEX_A)  # (3, 2, 2)
    return p, dp, hp


def _hex_value(x):
    p, _, _ = _hex_parts(x)
    return p.prod(axis=1)


def _hex_grad(x):
    p, dp, _ = _hex_parts(x)
    out = np.zeros_like(x)
    for i in range(3):
        j, k = [t for t in range(3) if t != i]
        out += dp[:, i] * (p[:, j] * p[:, k])[:, None]
    return out


def _hex_hess(x):
    p, dp, hp = _hex_parts(x)
    out = np.zeros((x.shape[0], 2, 2))
    for i in range(3):
        j, k = [t for t in range(3) if t != i]
        out += hp[i][None] * (p[:, j] * p[:, k])[:, None, None]
        for jj in (j, k):
            kk = k if jj == j else j
            out += np.einsum("na,nb->nab", dp[:, i], dp[:, jj]) * p[:, kk][:, None, None]
    return out


def _hex_f(x):
    return -np.trace(_hex_hess(x), axis1=1, axis2=2)


HEXAGON = Exact(value=_hex_value, grad=_hex_grad, hess=_hex_hess, f=_hex_f)


# -- unit square sin(pi x) sin(pi y) ----------------------------------------

def _sq_value(x):
    return np.sin(PI * x[:, 0]) * np.sin(PI * x[:, 1])


def _sq_grad(x):
    sx, sy = np.sin(PI * x[:, 0]), np.sin(PI * x[:, 1])
    cx, cy = np.cos(PI * x[:, 0]), np.cos(PI * x[:, 1])
    return PI * np.stack([cx * sy, sx * cy], axis=1)


def _sq_hess(x):
    sx, sy = np.sin(PI * x[:, 0]), np.sin(PI * x[:, 1])
    cx, cy = np.cos(PI * x[:, 0]), np.cos(PI * x[:, 1])
    H = np.empty((x.shape[0], 2, 2))
    H[:, 0, 0] = H[:, 1, 1] = -PI**2 * sx * sy
    H[:, 0, 1] = H[:, 1, 0] = PI**2 * cx * cy
    return H


SQUARE = Exact(value=_sq_value, grad=_sq_grad, hess=_sq_hess,
               f=lambda x: 2 * PI**2 * _sq_value(x))


# -- biharmonic (1 - cos 2 pi x)(1 - cos 2 pi y) -----------------------------

def _bh_factors(t):
    c, s = np.cos(2 * PI * t), np.sin(2 * PI * t)
    return 1 - c, 2 * PI * s, 4 * PI**2 * c, -16 * PI**4 * c  # A, A', A'', A''''


def _bh_value(x):
    return _bh_factors(x[:, 0])[0] * _bh_factors(x[:, 1])[0]


def _bh_grad(x):
    a, b = _bh_factors(x[:, 0]), _bh_factors(x[:, 1])
    return np.stack([a[1] * b[0], a[0] * b[1]], axis=1)


def _bh_hess(x):
    a, b = _bh_factors(x[:, 0]), _bh_factors(x[:, 1])
    H = np.empty((x.shape[0], 2, 2))
    H[:, 0, 0] = a[2] * b[0]
    H[:, 1, 1] = a[0] * b[2]
    H[:, 0, 1] = H[:, 1, 0] = a[1] * b[1]
    return H


def _bh_f(x):
    a, b = _bh_factors(x[:, 0]), _bh_factors(x[:, 1])
    return a[3] * b[0] + 2 * a[2] * b[2] + a[0] * b[3]


BIHARMONIC = Exact(value=_bh_value, grad=_bh_grad, hess=_bh_hess, f=_bh_f)


# -- Maxwell on the unit cube -----------------------------------------------

def _mx_value(x):
    s = np.sin(PI * x)
    c = np.cos(PI * x)
    return np.stack([s[:, 0] * c[:, 1] * c[:, 2], -c[:, 0] * s[:, 1] * c[:, 2],
                     np.zeros(x.shape[0])], axis=1) / PI**2


def _mx_curl(x):
    s = np.sin(PI * x)
    c = np.cos(PI * x)
    return np.stack([-c[:, 0] * s[:, 1] * s[:, 2], -s[:, 0] * c[:, 1] * s[:, 2],
                     2 * s[:, 0] * s[:, 1] * c[:, 2]], axis=1) / PI


MAXWELL = Exact(value=_mx_value, curl=_mx_curl, f=lambda x: (1 + 3 * PI**2) * _mx_value(x))


# -- Helmholtz plane wave ----------------------------------------------------

def helmholtz_plane_wave(kappa: float) -> Exact:
    k = kappa / np.sqrt(2.0)

    def value(x):
        return np.exp(1j * k * (x[:, 0] + x[:, 1]))

    def grad(x):
        return 1j * k * value(x)[:, None] * np.ones((1, 2))

    def g(x, n):
        return np.einsum("ni,ni->n", grad(x), n) - 1j * kappa * value(x)

    return Exact(value=value, grad=grad, f=lambda x: np.zeros(x.shape[0], dtype=complex), g=g)


# -- L-shape with cutoff -----------------------------------------------------

_R0 = 0.9


def _polar(x):
    r = np.hypot(x[:, 0], x[:, 1])
    th = np.mod(np.arctan2(x[:, 1], x[:, 0]), 2 * PI)
    return r, th


def _cutoff(r):
    t = np.clip(1 - r / _R0, 0.0, None)
    return t**8, -(8 / _R0) * t**7, (56 / _R0**2) * t**6


def _ls_value(x):
    r, th = _polar(x)
    phi, _, _ = _cutoff(r)
    return phi * r ** (2 / 3) * np.sin(2 * th / 3)


def _ls_grad(x):
    r, th = _polar(x)
    phi, dphi, _ = _cutoff(r)
    rs = np.where(r > 0, r, 1.0)
    s, c = np.sin(2 * th / 3), np.cos(2 * th / 3)
    ur = (dphi * rs ** (2 / 3) + (2 / 3) * phi * rs ** (-1 / 3)) * s
    ut = (2 / 3) * phi * rs ** (-1 / 3) * c  # (1/r) du/dtheta
    ct, st = np.cos(th), np.sin(th)
    g = np.stack([ur * ct - ut * st, ur * st + ut * ct], axis=1)
    g[r == 0] = 0.0
    return g


def _ls_f(x):
    r, th = _polar(x)
    _, dphi, ddphi = _cutoff(r)
    rs = np.where(r > 0, r, 1.0)
    return -np.sin(2 * th / 3) * rs ** (-1 / 3) * ((7 / 3) * dphi + rs * ddphi)


LSHAPE = Exact(value=_ls_value, grad=_ls_grad, f=_ls_f)

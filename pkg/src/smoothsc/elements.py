"""Reference elements: Lagrange (equispaced nodes) and first-kind Nedelec.

Each element is defined by a monomial spanning set and a list of degrees of
freedom attached to local sub-simplices; the shape functions are the dual
basis. Nedelec moments use unnormalised tangents and parameter-domain
integrals, which makes them invariant under the covariant Piola map, so the
physical element needs no sign or orientation corrections as long as local
vertices are sorted by global index.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .mesh import local_subsimplices
from .quadrature import gauss_segment, make_quadrature


def exponents(dim: int, degree: int) -> np.ndarray:
    out = []
    for total in range(degree + 1):
        for e in itertools.product(range(total + 1), repeat=dim):
            if sum(e) == total:
                out.append(e[::-1])
    return np.array(out, dtype=np.int64).reshape(-1, dim)


def monomials(exps: np.ndarray, pts: np.ndarray, deriv=None) -> np.ndarray:
    """Evaluate (derivatives of) monomials at points, shape ``(npts, nmon)``."""
    pts = np.atleast_2d(pts)
    e = exps.copy()
    coef = np.ones(len(exps))
    if deriv is not None:
        for a, k in enumerate(deriv):
            for _ in range(k):
                coef = coef * e[:, a]
                e[:, a] = np.maximum(e[:, a] - 1, 0)
    val = np.ones((pts.shape[0], len(exps)))
    for a in range(exps.shape[1]):
        val *= pts[:, a:a + 1] ** e[:, a]
    return val * coef


def _unit(dim, a):
    d = [0] * dim
    d[a] += 1
    return d


def _unit2(dim, a, b):
    d = [0] * dim
    d[a] += 1
    d[b] += 1
    return d


def _levi_civita(i, j, k):
    return (i - j) * (j - k) * (k - i) // 2


def reference_vertices(dim: int) -> np.ndarray:
    return np.vstack([np.zeros(dim), np.eye(dim)])


@dataclass(frozen=True)
class LocalDof:
    entity_dim: int
    entity: int  # local entity index within local_subsimplices(dim, entity_dim + 1)
    moment: int
    vertices: tuple  # local vertices of the supporting entity


class LagrangeElement:
    """Scalar P_k element with nodes on the equispaced barycentric lattice."""

    family = "lagrange"
    value_rank = 0

    def __init__(self, dim: int, degree: int):
        if degree < 1:
            raise ValueError("Lagrange degree must be >= 1")
        self.dim = dim
        self.degree = degree
        ref = reference_vertices(dim)
        nodes, dofs = [], []
        for r in range(1, dim + 2):
            for ent, verts in enumerate(local_subsimplices(dim, r)):
                lattice = [a for a in itertools.product(range(1, degree + 1), repeat=r)
                           if sum(a) == degree]
                for mom, a in enumerate(sorted(lattice, reverse=True)):
                    nodes.append(sum(ai * ref[v] for ai, v in zip(a, verts)) / degree)
                    dofs.append(LocalDof(r - 1, ent, mom, verts))
        self.nodes = np.array(nodes)
        self.dofs = dofs
        self.exps = exponents(dim, degree)
        V = monomials(self.exps, self.nodes)
        self.coeffs = np.linalg.inv(V).T

    @property
    def nb(self) -> int:
        return len(self.dofs)

    def values(self, pts):
        return monomials(self.exps, pts) @ self.coeffs.T

    def grads(self, pts):
        g = [monomials(self.exps, pts, _unit(self.dim, a)) @ self.coeffs.T for a in range(self.dim)]
        return np.stack(g, axis=-1)

    def hessians(self, pts):
        d = self.dim
        H = np.empty((np.atleast_2d(pts).shape[0], self.nb, d, d))
        for a in range(d):
            for b in range(a, d):
                H[:, :, a, b] = monomials(self.exps, pts, _unit2(d, a, b)) @ self.coeffs.T
                H[:, :, b, a] = H[:, :, a, b]
        return H

    def apply_dofs(self, fn):
        """Apply the local dof functionals to ``fn(pts) -> (npts, nfun)``."""
        return fn(self.nodes)


class NedelecElement:
    """First-kind Nedelec element of degree 1 or 2 on the reference tetrahedron."""

    family = "nedelec1"
    value_rank = 1

    def __init__(self, degree: int):
        if degree not in (1, 2):
            raise ValueError("Nedelec degree must be 1 or 2")
        self.dim = 3
        self.degree = degree
        k = degree
        self.exps = exponents(3, k)
        nm = len(self.exps)
        index = {tuple(e): i for i, e in enumerate(self.exps)}

        span = []
        for e in exponents(3, k - 1):
            for c in range(3):
                v = np.zeros((3, nm))
                v[c, index[tuple(e)]] = 1.0
                span.append(v)
        # x cross (m e_i) for homogeneous m of degree k - 1
        hom = [e for e in exponents(3, k - 1) if sum(e) == k - 1]
        for e in hom:
            for i in range(3):
                v = np.zeros((3, nm))
                for comp in range(3):
                    # (x cross e_i)_comp = sum_j eps(comp, j, i) x_j
                    for j in range(3):
                        eps = _levi_civita(comp, j, i)
                        if eps:
                            ee = list(e)
                            ee[j] += 1
                            v[comp, index[tuple(ee)]] += eps
                span.append(v)
        S = np.array(span).reshape(len(span), -1)
        _, s, Vt = np.linalg.svd(S, full_matrices=False)
        rank = int(np.sum(s > 1e-10 * s[0]))
        expected = k * (k + 2) * (k + 3) // 2
        assert rank == expected, (rank, expected)
        prim = Vt[:rank].reshape(rank, 3, nm)

        ref = reference_vertices(3)
        self.functionals = []  # (points, weight vectors)
        self.dofs = []
        g = gauss_segment(2 * k + 2)
        for ent, (i, j) in enumerate(local_subsimplices(3, 2)):
            t = ref[j] - ref[i]
            pts = ref[i] + g.points[:, :1] * t
            s_ = g.points[:, 0]
            legendre = [np.ones_like(s_), 2 * s_ - 1][:k]
            for mom, q in enumerate(legendre):
                self.functionals.append((pts, (g.weights * q)[:, None] * t))
                self.dofs.append(LocalDof(1, ent, mom, (i, j)))
        if k == 2:
            tq = make_quadrature(2, 2 * k + 2)
            for ent, (a, b, c) in enumerate(local_subsimplices(3, 3)):
                t1, t2 = ref[b] - ref[a], ref[c] - ref[a]
                pts = ref[a] + tq.points[:, :1] * t1 + tq.points[:, 1:2] * t2
                for mom, t in enumerate((t1, t2)):
                    self.functionals.append((pts, tq.weights[:, None] * t))
                    self.dofs.append(LocalDof(2, ent, mom, (a, b, c)))
        self._prim = prim
        V = self.apply_dofs(lambda p: self._eval_coeffs(prim, p))
        C = np.linalg.inv(V).T
        self.coeffs = np.einsum("ij,jcm->icm", C, prim)

    @property
    def nb(self) -> int:
        return len(self.dofs)

    def _eval_coeffs(self, coeffs, pts):
        return np.einsum("icm,nm->nic", coeffs, monomials(self.exps, pts))

    def values(self, pts):
        """Shape ``(npts, nb, 3)``."""
        return self._eval_coeffs(self.coeffs, pts)

    def _deriv(self, pts, a):
        return np.einsum("icm,nm->nic", self.coeffs, monomials(self.exps, pts, _unit(3, a)))

    def curls(self, pts):
        d = [self._deriv(pts, a) for a in range(3)]  # d[a][n, i, comp] = d comp / d x_a
        return np.stack([
            d[1][..., 2] - d[2][..., 1],
            d[2][..., 0] - d[0][..., 2],
            d[0][..., 1] - d[1][..., 0],
        ], axis=-1)

    def apply_dofs(self, fn):
        """Apply the moments to vector functions ``fn(pts) -> (npts, nfun, 3)``."""
        rows = []
        for pts, w in self.functionals:
            rows.append(np.einsum("qc,qfc->f", w, fn(pts)))
        return np.array(rows)


@lru_cache(maxsize=None)
def get_element(family: str, dim: int, degree: int):
    if family in ("lagrange", "dg"):
        return LagrangeElement(dim, degree)
    if family == "nedelec1":
        if dim != 3:
            raise ValueError("Nedelec elements are provided on tetrahedra only")
        return NedelecElement(degree)
    raise ValueError(f"unknown element family {family!r}")

"""Smoothers S for the enriched system: point Jacobi/Gauss-Seidel, vertex-patch
block Jacobi and symmetrized block Gauss-Seidel, and the HX auxiliary-space
smoother for Nedelec elements.

A :class:`SmootherSpec` names the smoother; :func:`make_smoother` binds it to
a matrix and returns a callable ``r -> S r``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numba
import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .femspace import DofMap
from .linalg import tri_solve

KINDS = ("identity", "jacobi", "gs_forward", "gs_backward", "gs_symmetric", "block_jacobi",
         "block_gs_symmetric", "hx", "exact")
SYMMETRIC_KINDS = ("identity", "jacobi", "gs_symmetric", "block_jacobi", "block_gs_symmetric", "hx", "exact")


class SmootherError(ValueError):
    pass


@dataclass(frozen=True)
class SmootherSpec:
    kind: str
    omega: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SmootherError(f"unknown smoother {self.kind!r}")
        if not 0 < self.omega <= 1:
            raise SmootherError("damping factor must lie in (0, 1]")

    @property
    def is_block(self) -> bool:
        return self.kind in ("block_jacobi", "block_gs_symmetric")


@dataclass
class PatchSet:
    """Vertex patches in reduced (free-dof) numbering, stored CSR-style."""

    ptr: np.ndarray
    dofs: np.ndarray
    vertices: np.ndarray  # mesh vertex owning each patch

    def __len__(self):
        return self.ptr.size - 1

    def patch(self, j: int) -> np.ndarray:
        return self.dofs[self.ptr[j]:self.ptr[j + 1]]

    @classmethod
    def from_lists(cls, patches):
        sizes = [len(p) for p in patches]
        ptr = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
        dofs = np.concatenate([np.asarray(p, dtype=np.int64) for p in patches]) if patches else np.zeros(0, np.int64)
        return cls(ptr, dofs, np.arange(len(patches)))


def build_patches(mesh, dm: DofMap) -> PatchSet:
    """Dofs whose supporting entity contains vertex j form patch j."""
    ent = dm.dof_entities
    fidx = dm.free_index
    pv, pd = [], []
    for r in range(mesh.dim + 1):
        sel = np.flatnonzero((ent[:, 0] == r) & (fidx >= 0))
        if sel.size == 0:
            continue
        verts = mesh.entities(r)[ent[sel, 1]]
        pv.append(verts.ravel())
        pd.append(np.repeat(fidx[sel], verts.shape[1]))
    pv = np.concatenate(pv)
    pd = np.concatenate(pd)
    order = np.lexsort((pd, pv))
    pv, pd = pv[order], pd[order]
    owners, start = np.unique(pv, return_index=True)
    ptr = np.concatenate([start, [pv.size]]).astype(np.int64)
    return PatchSet(ptr, pd.astype(np.int64), owners)


def _patch_blocks(A: sp.csr_matrix, patches: PatchSet):
    """Dense principal submatrices of A for every patch, grouped by size."""
    A = sp.csr_matrix(A)
    A.sort_indices()
    n = A.shape[0]
    rows = np.repeat(np.arange(n), np.diff(A.indptr))
    keys = rows * n + A.indices
    sizes = np.diff(patches.ptr)
    out = {}
    for s in np.unique(sizes):
        idx = np.flatnonzero(sizes == s)
        D = patches.dofs[patches.ptr[idx][:, None] + np.arange(s)]  # (np, s)
        k = (D[:, :, None] * n + D[:, None, :]).ravel()
        pos = np.searchsorted(keys, k)
        pos = np.minimum(pos, keys.size - 1)
        hit = keys[pos] == k
        vals = np.where(hit, A.data[pos], 0.0).reshape(len(idx), s, s)
        out[int(s)] = (idx, D, vals)
    return out


def _invert_blocks(blocks, patches: PatchSet):
    inv = {}
    for s, (idx, D, vals) in blocks.items():
        try:
            L = np.linalg.cholesky(vals)
        except np.linalg.LinAlgError:
            for t, B in enumerate(vals):
                try:
                    sla.cho_factor(B)
                except sla.LinAlgError:
                    raise SmootherError(
                        f"patch matrix of vertex {patches.vertices[idx[t]]} is not SPD") from None
            raise
        Linv = np.linalg.inv(L)
        inv[s] = (idx, D, np.einsum("nki,nkj->nij", Linv, Linv))
    return inv


def block_jacobi_matrix(A, patches: PatchSet, omega: float = 1.0) -> sp.csr_matrix:
    """omega * sum_j I_j A_j^{-1} I_j^T as a sparse matrix."""
    inv = _invert_blocks(_patch_blocks(A, patches), patches)
    rows, cols, vals = [], [], []
    for s, (idx, D, Binv) in inv.items():
        rows.append(np.broadcast_to(D[:, :, None], Binv.shape).ravel())
        cols.append(np.broadcast_to(D[:, None, :], Binv.shape).ravel())
        vals.append(Binv.ravel())
    n = A.shape[0]
    B = sp.coo_matrix((omega * np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(n, n)).tocsr()
    B.sum_duplicates()
    return B


@numba.njit(cache=True)
def _block_sweep(indptr, indices, data, pptr, pdofs, iptr, idata, order, r, x):
    """x += I_j A_j^{-1} I_j^T (r - A x) for patches j in the given order."""
    for j in order:
        a, b = pptr[j], pptr[j + 1]
        s = b - a
        res = np.empty(s)
        for t in range(s):
            i = pdofs[a + t]
            acc = r[i]
            for p in range(indptr[i], indptr[i + 1]):
                acc -= data[p] * x[indices[p]]
            res[t] = acc
        base = iptr[j]
        for t in range(s):
            acc = 0.0
            for u in range(s):
                acc += idata[base + t * s + u] * res[u]
            x[pdofs[a + t]] += acc


class Smoother:
    """A smoother bound to a matrix; call it on a residual vector."""

    def __init__(self, spec: SmootherSpec, apply: Callable, matrix: Optional[sp.spmatrix] = None):
        self.spec = spec
        self._apply = apply
        self.matrix = matrix  # explicit sparse S when available

    def __call__(self, r):
        return self._apply(r)

    apply = __call__


def make_smoother(spec: SmootherSpec, A, patches: Optional[PatchSet] = None, hx=None) -> Smoother:
    A = sp.csr_matrix(A)
    kind = spec.kind
    d = A.diagonal()
    if kind in ("jacobi", "gs_forward", "gs_backward", "gs_symmetric") and np.any(d == 0):
        raise SmootherError(f"zero diagonal entry at row {int(np.flatnonzero(d == 0)[0])}")
    if kind == "identity":
        return Smoother(spec, lambda r: np.array(r, copy=True), sp.identity(A.shape[0], format="csr"))
    if kind == "jacobi":
        S = sp.diags(spec.omega / d).tocsr()
        return Smoother(spec, lambda r: S @ r, S)
    if kind == "gs_forward":
        return Smoother(spec, lambda r: tri_solve(A, "lower_incl_diag", r))
    if kind == "gs_backward":
        return Smoother(spec, lambda r: tri_solve(A, "upper_incl_diag", r))
    if kind == "gs_symmetric":
        return Smoother(spec, lambda r: tri_solve(A, "upper_incl_diag", d * tri_solve(A, "lower_incl_diag", r)))
    if kind == "exact":
        lu = spla.splu(sp.csc_matrix(A))
        return Smoother(spec, lu.solve)
    if kind == "hx":
        if hx is None:
            raise SmootherError("hx smoother needs auxiliary operators (see build_hx)")
        return Smoother(spec, hx.apply)
    if patches is None:
        raise SmootherError(f"{kind} needs a patch set")
    _check_cover(patches, A.shape[0])
    if kind == "block_jacobi":
        B = block_jacobi_matrix(A, patches, spec.omega)
        return Smoother(spec, lambda r: B @ r, B)

    inv = _invert_blocks(_patch_blocks(A, patches), patches)
    npatch = len(patches)
    sizes = np.diff(patches.ptr)
    iptr = np.concatenate([[0], np.cumsum(sizes**2)]).astype(np.int64)
    idata = np.empty(iptr[-1])
    for s, (idx, _, Binv) in inv.items():
        pos = iptr[idx][:, None] + np.arange(s * s)
        idata[pos] = Binv.reshape(len(idx), -1)
    fwd = np.arange(npatch)
    bwd = fwd[::-1].copy()
    data = A.data.astype(float)

    def apply(r):
        r = np.ascontiguousarray(r, dtype=float)
        x = np.zeros_like(r)
        _block_sweep(A.indptr, A.indices, data, patches.ptr, patches.dofs, iptr, idata, fwd, r, x)
        _block_sweep(A.indptr, A.indices, data, patches.ptr, patches.dofs, iptr, idata, bwd, r, x)
        return x

    return Smoother(spec, apply)


def _check_cover(patches: PatchSet, n: int):
    covered = np.zeros(n, dtype=bool)
    covered[patches.dofs] = True
    if not covered.all():
        raise SmootherError(f"patches miss {int((~covered).sum())} free dofs")


def apply(spec: SmootherSpec, A, r, patches: Optional[PatchSet] = None, hx=None):
    """One-shot S r (rebuilds caches; bind with :func:`make_smoother` in loops)."""
    return make_smoother(spec, A, patches, hx)(r)


@dataclass
class HXData:
    """Auxiliary operators D_Nd^{-1}, G D^{-1} G^T and P Dvec^{-1} P^T."""

    dinv_nd: np.ndarray
    G: sp.csr_matrix
    dinv_lag: np.ndarray
    P: sp.csr_matrix
    dinv_vec: np.ndarray

    def apply(self, r):
        return (self.dinv_nd * r + self.G @ (self.dinv_lag * (self.G.T @ r))
                + self.P @ (self.dinv_vec * (self.P.T @ r)))


def build_hx(nd_dm: DofMap, lag_dm: DofMap, A_nd, A_lag) -> tuple[SmootherSpec, HXData]:
    """HX smoother for the Nedelec matrix over free Nedelec dofs.

    ``A_lag`` is the Lagrange matrix of (grad, grad) + (., .) on all Lagrange dofs.
    """
    from .femspace import discrete_gradient, nedelec_interpolation

    if nd_dm.mesh is not lag_dm.mesh or nd_dm.spec.family != "nedelec1" or lag_dm.spec.family != "lagrange":
        raise SmootherError("hx needs Nedelec and Lagrange spaces on the same mesh")
    if A_lag.shape[0] != lag_dm.ndof or A_nd.shape[0] != nd_dm.nfree:
        raise SmootherError("operator sizes do not match the spaces")
    G = sp.csr_matrix(discrete_gradient(nd_dm, lag_dm))[nd_dm.free]
    P = sp.csr_matrix(nedelec_interpolation(nd_dm, lag_dm))[nd_dm.free]
    dl = 1.0 / A_lag.diagonal()
    data = HXData(1.0 / A_nd.diagonal(), G, dl, P, np.tile(dl, 3))
    return SmootherSpec("hx"), data

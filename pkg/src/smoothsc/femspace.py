"""Degree-of-freedom maps, interpolation, evaluation and the V -> V~ embedding."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .elements import get_element
from .mesh import Mesh


class SpaceError(ValueError):
    pass


@dataclass(frozen=True)
class SpaceSpec:
    family: str  # "lagrange", "dg" or "nedelec1"
    degree: int
    dim: int = 2
    field: str = "real"
    dirichlet: bool = True

    def __post_init__(self):
        f, k, d = self.family, self.degree, self.dim
        ok = (
            (f in ("lagrange", "dg") and d == 2 and 1 <= k <= 5)
            or (f == "lagrange" and d == 3 and 1 <= k <= 3)
            or (f == "nedelec1" and d == 3 and k in (1, 2))
        )
        if not ok:
            raise SpaceError(f"unsupported space: {f} degree {k} in {d}D")
        if f in ("dg", "nedelec1") and self.dirichlet:
            object.__setattr__(self, "dirichlet", False)
        if self.field not in ("real", "complex"):
            raise SpaceError("field must be 'real' or 'complex'")

    def with_degree(self, degree: int) -> "SpaceSpec":
        return SpaceSpec(self.family, degree, self.dim, self.field, self.dirichlet)


@dataclass(frozen=True, eq=False)
class DofMap:
    """Global numbering of a finite element space on a mesh.

    Numbering is entity-major (vertices, edges, faces, cells), then entity
    index, then moment index. ``cell_dofs[c, i]`` is the global dof of local
    shape function ``i`` on cell ``c``. Solver-level vectors live on
    ``free`` dofs only; full vectors carry zeros on Dirichlet dofs.
    """

    spec: SpaceSpec
    mesh: Mesh
    cell_dofs: np.ndarray
    dof_entities: np.ndarray  # (ndof, 3): entity dim, entity index, moment
    boundary_mask: np.ndarray

    @property
    def element(self):
        return get_element(self.spec.family, self.spec.dim, self.spec.degree)

    @property
    def ndof(self) -> int:
        return self.dof_entities.shape[0]

    @cached_property
    def free(self) -> np.ndarray:
        return np.flatnonzero(~self.boundary_mask)

    @property
    def nfree(self) -> int:
        return self.free.size

    @cached_property
    def free_index(self) -> np.ndarray:
        """Map full dof index -> reduced index (-1 on Dirichlet dofs)."""
        idx = -np.ones(self.ndof, dtype=np.int64)
        idx[self.free] = np.arange(self.nfree)
        return idx

    @property
    def dtype(self):
        return complex if self.spec.field == "complex" else float

    def expand(self, x_free: np.ndarray) -> np.ndarray:
        full = np.zeros(self.ndof, dtype=np.result_type(x_free, float))
        full[self.free] = x_free
        return full

    def restrict(self, x_full: np.ndarray) -> np.ndarray:
        return x_full[self.free]

    @cached_property
    def _first_occurrence(self):
        flat = self.cell_dofs.ravel()
        _, first = np.unique(flat, return_index=True)
        nb = self.cell_dofs.shape[1]
        return first // nb, first % nb


def build_dofmap(mesh: Mesh, spec: SpaceSpec) -> DofMap:
    if spec.dim != mesh.dim:
        raise SpaceError("space dimension does not match mesh dimension")
    el = get_element(spec.family, spec.dim, spec.degree)
    nc = mesh.num_cells
    if spec.family == "dg":
        nb = el.nb
        cell_dofs = np.arange(nc * nb).reshape(nc, nb)
        ent = np.stack([np.full(nc * nb, mesh.dim), np.repeat(np.arange(nc), nb),
                        np.tile(np.arange(nb), nc)], axis=1)
        return DofMap(spec, mesh, cell_dofs, ent, np.zeros(nc * nb, dtype=bool))

    d = mesh.dim
    per_entity = [0] * (d + 1)
    for dof in el.dofs:
        per_entity[dof.entity_dim] = max(per_entity[dof.entity_dim], dof.moment + 1)
    counts = [mesh.entities(r).shape[0] for r in range(d + 1)]
    offsets = np.concatenate([[0], np.cumsum([per_entity[r] * counts[r] for r in range(d + 1)])])
    cell_dofs = np.empty((nc, el.nb), dtype=np.int64)
    for i, dof in enumerate(el.dofs):
        ents = mesh.cell_entities(dof.entity_dim)[:, dof.entity]
        cell_dofs[:, i] = offsets[dof.entity_dim] + ents * per_entity[dof.entity_dim] + dof.moment
    ent_rows = []
    mask = []
    for r in range(d + 1):
        n = per_entity[r]
        if n == 0:
            continue
        ids = np.repeat(np.arange(counts[r]), n)
        ent_rows.append(np.stack([np.full(ids.size, r), ids, np.tile(np.arange(n), counts[r])], 1))
        if spec.dirichlet:
            mask.append(np.repeat(mesh.boundary_entity_mask(r), n))
        else:
            mask.append(np.zeros(ids.size, dtype=bool))
    return DofMap(spec, mesh, cell_dofs, np.concatenate(ent_rows), np.concatenate(mask))


# -- basis tabulation on physical cells ------------------------------------

def tabulate(dm: DofMap, ref_pts: np.ndarray, cells=None, what=("value",)) -> dict:
    """Physical basis data at reference points on the given cells.

    Returns a dict with any of ``value`` (nc, nq, nb[, 3]), ``grad``
    (nc, nq, nb, d), ``hess`` (nc, nq, nb, d, d), ``curl`` (nc, nq, nb, 3).
    """
    mesh = dm.mesh
    el = dm.element
    if cells is None:
        cells = np.arange(mesh.num_cells)
    J = mesh.jacobians[cells]
    invJ = mesh.inv_jacobians[cells]
    det = mesh.det[cells]
    out = {}
    if el.value_rank == 0:
        if "value" in what:
            out["value"] = np.broadcast_to(el.values(ref_pts), (len(cells),) + (len(ref_pts), el.nb))
        if "grad" in what:
            out["grad"] = np.einsum("cji,qbj->cqbi", invJ, el.grads(ref_pts))
        if "hess" in what:
            out["hess"] = np.einsum("cka,qbkl,clm->cqbam", invJ, el.hessians(ref_pts), invJ)
    else:
        if "value" in what:
            out["value"] = np.einsum("cji,qbj->cqbi", invJ, el.values(ref_pts))
        if "curl" in what:
            out["curl"] = np.einsum("cij,qbj->cqbi", J, el.curls(ref_pts)) / det[:, None, None, None]
    return out


def eval_function(dm: DofMap, coeffs: np.ndarray, cell: int, ref_point) -> dict:
    """Value record of the FE function with full coefficient vector ``coeffs``."""
    if not 0 <= cell < dm.mesh.num_cells:
        raise SpaceError(f"cell {cell} out of range")
    pts = np.atleast_2d(np.asarray(ref_point, dtype=float))
    what = ("value", "curl") if dm.element.value_rank else ("value", "grad", "hess")
    tab = tabulate(dm, pts, np.array([cell]), what)
    c = coeffs[dm.cell_dofs[cell]]
    out = {}
    for key, arr in tab.items():
        out[key] = np.tensordot(c, arr[0, 0], axes=(0, 0))
    return out


def eval_at(dm: DofMap, coeffs: np.ndarray, ref_pts: np.ndarray, cells=None, what=("value",)):
    """Vectorised evaluation at the same reference points on many cells."""
    tab = tabulate(dm, ref_pts, cells, what)
    c = coeffs[dm.cell_dofs if cells is None else dm.cell_dofs[cells]]
    return {k: np.einsum("cb,cqb...->cq...", c, v) for k, v in tab.items()}


# -- interpolation -----------------------------------------------------------

def interpolate(fn, dm: DofMap) -> np.ndarray:
    """Canonical interpolant of ``fn(x: (n, d)) -> values`` as a full coefficient vector.

    Lagrange/DG: nodal values. Nedelec: edge/face moments of the vector field.
    """
    el = dm.element
    mesh = dm.mesh
    cells, local = dm._first_occurrence
    dtype = dm.dtype
    out = np.zeros(dm.ndof, dtype=dtype)
    if el.value_rank == 0:
        x = mesh.vertices[mesh.cells[cells, 0]] + np.einsum(
            "cij,cj->ci", mesh.jacobians[cells], el.nodes[local])
        out[:] = fn(x)
        return out
    dof_ids = np.arange(dm.ndof)
    for i, (pts, w) in enumerate(el.functionals):
        sel = local == i
        if not sel.any():
            continue
        c = cells[sel]
        J = mesh.jacobians[c]
        x = mesh.map_points(pts, c)
        vals = np.asarray(fn(x.reshape(-1, 3))).reshape(len(c), len(pts), 3)
        wphys = np.einsum("cij,qj->cqi", J, w)
        out[dof_ids[sel]] = np.einsum("cqi,cqi->c", wphys, vals)
    return out


# -- embedding V -> V~ -------------------------------------------------------

def _assemble_by_first(fine: DofMap, coarse: DofMap, local_mats) -> sp.csr_matrix:
    """Scatter per-cell local matrices, taking each fine row from one cell only.

    ``local_mats`` is either one (nbf, nbc) array shared by all cells or an
    array (nc, nbf, nbc).
    """
    cells, local = fine._first_occurrence
    L = np.asarray(local_mats)
    rows_vals = L[local] if L.ndim == 2 else L[cells, local]
    cols = coarse.cell_dofs[cells]
    nbc = cols.shape[1]
    rows = np.repeat(np.arange(fine.ndof), nbc)
    vals = rows_vals.ravel()
    keep = np.abs(vals) > 1e-14
    return sp.csr_matrix((vals[keep], (rows[keep], cols.ravel()[keep])),
                         shape=(fine.ndof, coarse.ndof))


def prolongation(coarse: DofMap, fine: DofMap) -> sp.csr_matrix:
    """Matrix of the inclusion V -> V~ on full coefficient vectors."""
    cs, fs = coarse.spec, fine.spec
    if (coarse.mesh is not fine.mesh or cs.family != fs.family or fs.degree != cs.degree + 1
            or cs.dirichlet != fs.dirichlet):
        raise SpaceError("prolongation needs the same mesh/family and degree k -> k+1")
    P = _assemble_by_first(fine, coarse, fine.element.apply_dofs(coarse.element.values))
    P.sort_indices()
    return P


def reduced(P: sp.spmatrix, rows: DofMap, cols: DofMap) -> sp.csr_matrix:
    """Restrict a full-dof operator to free rows/columns."""
    return sp.csr_matrix(P)[rows.free][:, cols.free]


def discrete_gradient(nd: DofMap, lag: DofMap) -> sp.csr_matrix:
    """Nedelec moments of gradients of the scalar Lagrange basis."""
    if nd.mesh is not lag.mesh or nd.spec.family != "nedelec1" or lag.spec.family != "lagrange":
        raise SpaceError("discrete gradient needs Nedelec and Lagrange spaces on one mesh")
    L = nd.element.apply_dofs(lag.element.grads)
    return _assemble_by_first(nd, lag, L)


def nedelec_interpolation(nd: DofMap, lag: DofMap) -> sp.csr_matrix:
    """Nedelec interpolation of the vector Lagrange space, columns ordered by component."""
    if nd.mesh is not lag.mesh:
        raise SpaceError("spaces live on different meshes")
    mesh = nd.mesh
    nde, le = nd.element, lag.element
    J = mesh.jacobians
    nc = mesh.num_cells
    local = np.empty((nc, nde.nb, 3, le.nb))
    for i, (pts, w) in enumerate(nde.functionals):
        phi = le.values(pts)  # (nq, nbl)
        wphys = np.einsum("cij,qj->cqi", J, w)
        local[:, i] = np.einsum("cqi,qb->cib", wphys, phi)
    # expand to 3 * nbl columns with component-major global numbering
    cells, loc = nd._first_occurrence
    rows_vals = local[cells, loc]  # (ndof, 3, nbl)
    cols = lag.cell_dofs[cells][:, None, :] + lag.ndof * np.arange(3)[None, :, None]
    rows = np.repeat(np.arange(nd.ndof), 3 * le.nb)
    vals = rows_vals.ravel()
    keep = np.abs(vals) > 1e-14
    return sp.csr_matrix((vals[keep], (rows[keep], cols.ravel()[keep])), shape=(nd.ndof, 3 * lag.ndof))

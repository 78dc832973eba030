"""Bilinear forms, load vectors and error norms for the model problems.

Cell integrals on affine simplices are computed from reference integrals of
shape function products contracted with the cell metric; facet terms (DG,
CIP, Robin boundary) use facet quadrature evaluated from both sides.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .femspace import DofMap
from .mesh import local_subsimplices
from .elements import reference_vertices
from .quadrature import MAX_DEGREE, make_quadrature

FORM_KINDS = ("poisson_h1", "dg_poisson", "hcurl", "cip_biharmonic", "helmholtz_robin")
NORM_KINDS = ("h1_semi", "l2", "broken_1h", "cip_2h", "hcurl", "h1_kappa", "cip_hess")

_CHUNK = 16384


class AssemblyError(ValueError):
    pass


@dataclass(frozen=True)
class FormSpec:
    kind: str
    gamma: float = 10.0
    kappa: float = 1.0

    def __post_init__(self):
        if self.kind not in FORM_KINDS:
            raise AssemblyError(f"unknown form {self.kind!r}")
        if self.kind in ("dg_poisson", "cip_biharmonic") and not self.gamma > 0:
            raise AssemblyError("penalty parameter must be positive")
        if self.kind == "helmholtz_robin" and not self.kappa > 0:
            raise AssemblyError("wave number must be positive")


def _check_pair(form: FormSpec, dm: DofMap):
    s = dm.spec
    ok = {
        "poisson_h1": s.family == "lagrange",
        "dg_poisson": s.family == "dg",
        "hcurl": s.family == "nedelec1",
        "cip_biharmonic": s.family == "lagrange" and s.dim == 2,
        "helmholtz_robin": s.family == "lagrange" and s.field == "complex" and not s.dirichlet,
    }[form.kind]
    if not ok:
        raise AssemblyError(f"form {form.kind} is incompatible with space {s}")


def _qdeg(dim, deg):
    return min(deg, MAX_DEGREE[dim])


# -- cell integrals ----------------------------------------------------------

def cell_stiffness(dm: DofMap) -> np.ndarray:
    """Element matrices of (grad u, grad v), shape (nc, nb, nb)."""
    el, mesh = dm.element, dm.mesh
    q = make_quadrature(mesh.dim, _qdeg(mesh.dim, 2 * (el.degree + 1)))
    G = el.grads(q.points)
    R = np.einsum("q,qia,qjb->abij", q.weights, G, G)
    M = np.einsum("cak,cbk->cab", mesh.inv_jacobians, mesh.inv_jacobians)
    return np.abs(mesh.det)[:, None, None] * np.einsum("cab,abij->cij", M, R)


def cell_mass(dm: DofMap) -> np.ndarray:
    el, mesh = dm.element, dm.mesh
    q = make_quadrature(mesh.dim, _qdeg(mesh.dim, 2 * (el.degree + 1)))
    if el.value_rank == 0:
        V = el.values(q.points)
        return np.abs(mesh.det)[:, None, None] * np.einsum("q,qi,qj->ij", q.weights, V, V)[None]
    V = el.values(q.points)
    R = np.einsum("q,qia,qjb->abij", q.weights, V, V)
    M = np.einsum("cak,cbk->cab", mesh.inv_jacobians, mesh.inv_jacobians)
    return np.abs(mesh.det)[:, None, None] * np.einsum("cab,abij->cij", M, R)


def cell_curlcurl(dm: DofMap) -> np.ndarray:
    el, mesh = dm.element, dm.mesh
    q = make_quadrature(3, 2 * el.degree)
    C = el.curls(q.points)
    R = np.einsum("q,qia,qjb->abij", q.weights, C, C)
    JtJ = np.einsum("cka,ckb->cab", mesh.jacobians, mesh.jacobians)
    return np.einsum("cab,abij->cij", JtJ, R) / np.abs(mesh.det)[:, None, None]


def cell_hessian(dm: DofMap) -> np.ndarray:
    el, mesh = dm.element, dm.mesh
    q = make_quadrature(mesh.dim, _qdeg(mesh.dim, 2 * el.degree))
    H = el.hessians(q.points)
    R = np.einsum("q,qiab,qjce->abceij", q.weights, H, H)
    M = np.einsum("cak,cbk->cab", mesh.inv_jacobians, mesh.inv_jacobians)
    return np.abs(mesh.det)[:, None, None] * np.einsum("nbc,nea,abceij->nij", M, M, R)


def _scatter(dm: DofMap, rows_loc, cols_loc, vals, shape=None) -> sp.csr_matrix:
    n = dm.ndof
    A = sp.coo_matrix((vals.ravel(), (rows_loc.ravel(), cols_loc.ravel())),
                      shape=shape or (n, n)).tocsr()
    A.sum_duplicates()
    return A


def _scatter_cells(dm: DofMap, K: np.ndarray) -> sp.csr_matrix:
    cd = dm.cell_dofs
    nb = cd.shape[1]
    rows = np.broadcast_to(cd[:, :, None], (cd.shape[0], nb, nb))
    cols = np.broadcast_to(cd[:, None, :], (cd.shape[0], nb, nb))
    return _scatter(dm, rows, cols, K)


# -- facet machinery ---------------------------------------------------------

def _facet_rule(dim, degree):
    q = make_quadrature(dim - 1, _qdeg(dim - 1, degree))
    ref_measure = 1.0 if dim == 2 else 0.5
    return q.points, q.weights / ref_measure


def _facet_ref_points(dim, s_pts):
    """Reference-cell coordinates of facet points for every local facet."""
    ref = reference_vertices(dim)
    out = []
    for verts in local_subsimplices(dim, dim):
        base = ref[verts[0]]
        pts = base + sum(s_pts[:, k:k + 1] * (ref[verts[k + 1]] - base) for k in range(dim - 1))
        out.append(pts)
    return np.array(out)  # (nlf, nq, dim)


def _facet_side(dm: DofMap, facets, side, s_pts, what):
    """Physical basis data on one side of the given facets, (nF, nq, nb, ...)."""
    mesh, el = dm.mesh, dm.element
    cells_all, local_all = mesh.facet_cells
    cells = cells_all[facets, side]
    lf = local_all[facets, side]
    pts = _facet_ref_points(mesh.dim, s_pts)
    invJ = mesh.inv_jacobians[cells]
    out = {}
    if "value" in what:
        tab = np.array([el.values(p) for p in pts])
        out["value"] = tab[lf]
    if "grad" in what:
        tab = np.array([el.grads(p) for p in pts])
        out["grad"] = np.einsum("fji,fqbj->fqbi", invJ, tab[lf])
    if "hess" in what:
        tab = np.array([el.hessians(p) for p in pts])
        out["hess"] = np.einsum("fka,fqbkl,flm->fqbam", invJ, tab[lf], invJ)
    x0 = mesh.vertices[mesh.cells[cells, 0]]
    out["x"] = x0[:, None, :] + np.einsum("fij,fqj->fqi", mesh.jacobians[cells], pts[lf])
    out["cells"] = cells
    return out


def _facet_terms(dm: DofMap, form: FormSpec) -> sp.csr_matrix:
    """Interior-penalty facet contributions for dg_poisson / cip_biharmonic."""
    mesh, el = dm.mesh, dm.element
    k = el.degree
    s_pts, s_w = _facet_rule(mesh.dim, 2 * k + 2)
    cells, _ = mesh.facet_cells
    nF = mesh.facets.shape[0]
    interior = np.flatnonzero(cells[:, 1] >= 0)
    boundary = np.flatnonzero(cells[:, 1] < 0)
    normals = mesh.facet_normals()
    hE = mesh.facet_sizes()
    blocks = []
    what = ("grad",) if form.kind == "cip_biharmonic" else ("value", "grad")
    if form.kind == "cip_biharmonic":
        what = ("grad", "hess")
    for group, nsides in ((interior, 2), (boundary, 1)):
        for start in range(0, group.size, _CHUNK):
            F = group[start:start + _CHUNK]
            if F.size == 0:
                continue
            n = normals[F]
            wq = s_w[None, :] * hE[F, None]
            sides = [_facet_side(dm, F, s, s_pts, what) for s in range(nsides)]
            half = 0.5 if nsides == 2 else 1.0
            jump, avg = [], []
            for s, tab in enumerate(sides):
                sig = 1.0 if s == 0 else -1.0
                dn = np.einsum("fqbi,fi->fqb", tab["grad"], n)
                if form.kind == "dg_poisson":
                    jump.append(sig * tab["value"])
                    avg.append(half * dn)
                else:
                    jump.append(sig * dn)
                    avg.append(half * np.einsum("fqbij,fi,fj->fqb", tab["hess"], n, n))
            pen = form.gamma / hE[F]
            for s in range(nsides):
                for t in range(nsides):
                    # rows: test functions from side s, columns: trial from side t
                    loc = (-np.einsum("fq,fqj,fqi->fij", wq, avg[t], jump[s])
                           - np.einsum("fq,fqi,fqj->fij", wq, avg[s], jump[t])
                           + pen[:, None, None] * np.einsum("fq,fqi,fqj->fij", wq, jump[s], jump[t]))
                    rd = dm.cell_dofs[sides[s]["cells"]]
                    cd = dm.cell_dofs[sides[t]["cells"]]
                    nb = rd.shape[1]
                    blocks.append((np.broadcast_to(rd[:, :, None], (F.size, nb, nb)),
                                   np.broadcast_to(cd[:, None, :], (F.size, nb, nb)), loc))
    rows = np.concatenate([b[0].ravel() for b in blocks])
    cols = np.concatenate([b[1].ravel() for b in blocks])
    vals = np.concatenate([b[2].ravel() for b in blocks])
    return _scatter(dm, rows, cols, vals)


def boundary_mass(dm: DofMap) -> sp.csr_matrix:
    mesh, el = dm.mesh, dm.element
    s_pts, s_w = _facet_rule(mesh.dim, 2 * el.degree + 2)
    F = mesh.boundary_facets
    tab = _facet_side(dm, F, 0, s_pts, ("value",))
    wq = s_w[None, :] * mesh.facet_sizes(F)[:, None]
    loc = np.einsum("fq,fqi,fqj->fij", wq, tab["value"], tab["value"])
    rd = dm.cell_dofs[tab["cells"]]
    nb = rd.shape[1]
    return _scatter(dm, np.broadcast_to(rd[:, :, None], (F.size, nb, nb)),
                    np.broadcast_to(rd[:, None, :], (F.size, nb, nb)), loc)


def assemble_full(form: FormSpec, dm: DofMap) -> sp.csr_matrix:
    """Assembled matrix over all dofs (no Dirichlet elimination)."""
    _check_pair(form, dm)
    kind = form.kind
    if kind == "poisson_h1":
        A = _scatter_cells(dm, cell_stiffness(dm))
    elif kind == "dg_poisson":
        A = _scatter_cells(dm, cell_stiffness(dm)) + _facet_terms(dm, form)
    elif kind == "hcurl":
        A = _scatter_cells(dm, cell_curlcurl(dm) + cell_mass(dm))
    elif kind == "cip_biharmonic":
        A = _scatter_cells(dm, cell_hessian(dm)) + _facet_terms(dm, form)
    else:
        K = _scatter_cells(dm, cell_stiffness(dm))
        M = _scatter_cells(dm, cell_mass(dm))
        A = (K - form.kappa**2 * M - 1j * form.kappa * boundary_mass(dm)).astype(complex)
    A = sp.csr_matrix(0.5 * (A + A.T))
    A.sum_duplicates()
    A.eliminate_zeros()
    A.sort_indices()
    return A


def assemble_matrix(form: FormSpec, dm: DofMap) -> sp.csr_matrix:
    """Matrix over the free (unmasked) dofs."""
    A = assemble_full(form, dm)
    if dm.nfree == dm.ndof:
        return A
    A = A[dm.free][:, dm.free].tocsr()
    A.sort_indices()
    return A


def lagrange_h1_matrix(dm: DofMap) -> sp.csr_matrix:
    """(grad u, grad v) + (u, v) on all dofs; the auxiliary operator of the HX smoother."""
    A = _scatter_cells(dm, cell_stiffness(dm) + cell_mass(dm))
    A = sp.csr_matrix(0.5 * (A + A.T))
    A.sort_indices()
    return A


def curlcurl_matrix(dm: DofMap) -> sp.csr_matrix:
    return _scatter_cells(dm, cell_curlcurl(dm))


# -- right-hand sides --------------------------------------------------------

def assemble_rhs(form: FormSpec, data, dm: DofMap, qdeg=None) -> np.ndarray:
    """Load vector over free dofs.

    ``data`` needs ``f(x)`` (vector-valued for hcurl); helmholtz also uses
    ``g(x, n)`` on boundary facets and assembles ``-(f, v) + <g, v>``.
    """
    _check_pair(form, dm)
    mesh, el = dm.mesh, dm.element
    deg = qdeg if qdeg is not None else 2 * (el.degree + 1)
    q = make_quadrature(mesh.dim, _qdeg(mesh.dim, deg))
    b = np.zeros(dm.ndof, dtype=complex if dm.spec.field == "complex" else float)
    nc = mesh.num_cells
    for start in range(0, nc, _CHUNK):
        cells = np.arange(start, min(start + _CHUNK, nc))
        x = mesh.map_points(q.points, cells)
        fx = np.asarray(data.f(x.reshape(-1, mesh.dim)))
        w = q.weights[None, :] * np.abs(mesh.det[cells])[:, None]
        if el.value_rank == 0:
            fx = fx.reshape(len(cells), len(q.points))
            loc = np.einsum("cq,cq,qb->cb", w, fx, el.values(q.points))
        else:
            fx = fx.reshape(len(cells), len(q.points), 3)
            phi = np.einsum("cji,qbj->cqbi", mesh.inv_jacobians[cells], el.values(q.points))
            loc = np.einsum("cq,cqi,cqbi->cb", w, fx, phi)
        np.add.at(b, dm.cell_dofs[cells].ravel(), loc.ravel())
    if form.kind == "helmholtz_robin":
        b = -b
        s_pts, s_w = _facet_rule(mesh.dim, deg)
        F = mesh.boundary_facets
        tab = _facet_side(dm, F, 0, s_pts, ("value",))
        n = mesh.facet_normals(F)
        gx = np.asarray(data.g(tab["x"].reshape(-1, mesh.dim), np.repeat(n, len(s_w), axis=0)))
        gx = gx.reshape(F.size, len(s_w))
        wq = s_w[None, :] * mesh.facet_sizes(F)[:, None]
        loc = np.einsum("fq,fq,fqb->fb", wq, gx, tab["value"])
        np.add.at(b, dm.cell_dofs[tab["cells"]].ravel(), loc.ravel())
    return b[dm.free]


# -- error norms -------------------------------------------------------------

class NormError(ValueError):
    pass


def _need(exact, name):
    fn = getattr(exact, name, None)
    if fn is None:
        raise NormError(f"exact solution provides no {name!r} for this norm")
    return fn


def error_norm(dm: DofMap, coeffs: np.ndarray, exact, norm: str, gamma=None, kappa=None,
               qdeg=None) -> float:
    """Norm of ``exact - u_h`` with ``u_h`` given by its full coefficient vector.

    ``exact`` is any object with the callables the norm needs among
    ``value``, ``grad``, ``hess``, ``curl``; pass ``exact=None`` to take the
    norm of ``u_h`` itself.
    """
    if norm not in NORM_KINDS:
        raise NormError(f"unknown norm {norm!r}")
    mesh, el = dm.mesh, dm.element
    d = mesh.dim
    deg = qdeg if qdeg is not None else 2 * el.degree + 4
    q = make_quadrature(d, _qdeg(d, deg))
    zero = _Zero(d)
    ex = exact if exact is not None else zero

    need_val = norm in ("l2", "hcurl", "h1_kappa")
    need_grad = norm in ("h1_semi", "broken_1h", "h1_kappa")
    what = []
    if el.value_rank == 0:
        if need_val:
            what.append("value")
        if need_grad:
            what.append("grad")
        if norm in ("cip_2h", "cip_hess"):
            what.append("hess")
    else:
        what = ["value", "curl"] if norm in ("hcurl", "l2") else ["value"]
    total = 0.0
    nc = mesh.num_cells
    for start in range(0, nc, _CHUNK):
        cells = np.arange(start, min(start + _CHUNK, nc))
        x = mesh.map_points(q.points, cells).reshape(-1, d)
        uh = _eval_cells(dm, coeffs, q.points, cells, what)
        w = (q.weights[None, :] * np.abs(mesh.det[cells])[:, None]).ravel()
        if norm == "l2":
            e = np.asarray(_need(ex, "value")(x)).reshape(uh["value"].shape) - uh["value"]
            total += _wsum(w, e)
        if norm in ("h1_semi", "broken_1h", "h1_kappa"):
            e = np.asarray(_need(ex, "grad")(x)).reshape(uh["grad"].shape) - uh["grad"]
            total += _wsum(w, e)
        if norm == "h1_kappa":
            e = np.asarray(_need(ex, "value")(x)).reshape(uh["value"].shape) - uh["value"]
            total += kappa**2 * _wsum(w, e)
        if norm == "hcurl":
            e = np.asarray(_need(ex, "value")(x)).reshape(uh["value"].shape) - uh["value"]
            c = np.asarray(_need(ex, "curl")(x)).reshape(uh["curl"].shape) - uh["curl"]
            total += _wsum(w, e) + _wsum(w, c)
        if norm in ("cip_2h", "cip_hess"):
            e = np.asarray(_need(ex, "hess")(x)).reshape(uh["hess"].shape) - uh["hess"]
            total += _wsum(w, e)
    if norm in ("broken_1h", "cip_2h"):
        if gamma is None:
            raise NormError("broken norms need the penalty parameter gamma")
        total += _jump_norm_sq(dm, coeffs, ex, norm, gamma, deg)
    return float(np.sqrt(total))


class _Zero:
    def __init__(self, d):
        self.d = d

    def value(self, x):
        return np.zeros(x.shape[0])

    def grad(self, x):
        return np.zeros_like(x)

    def hess(self, x):
        return np.zeros((x.shape[0], self.d, self.d))

    def curl(self, x):
        return np.zeros_like(x)


def _wsum(w, e):
    e2 = np.abs(e) ** 2
    e2 = e2.reshape(w.size, -1).sum(axis=1)
    return float(np.dot(w, e2))


def _eval_cells(dm, coeffs, pts, cells, what):
    mesh, el = dm.mesh, dm.element
    c = coeffs[dm.cell_dofs[cells]]
    out = {}
    invJ = mesh.inv_jacobians[cells]
    if el.value_rank == 0:
        if "value" in what:
            out["value"] = c @ el.values(pts).T
        if "grad" in what:
            g = np.einsum("cb,qbj->cqj", c, el.grads(pts))
            out["grad"] = np.einsum("cji,cqj->cqi", invJ, g)
        if "hess" in what:
            H = np.einsum("cb,qbkl->cqkl", c, el.hessians(pts))
            out["hess"] = np.einsum("cka,cqkl,clm->cqam", invJ, H, invJ)
    else:
        v = np.einsum("cb,qbj->cqj", c, el.values(pts))
        out["value"] = np.einsum("cji,cqj->cqi", invJ, v)
        if "curl" in what:
            cu = np.einsum("cb,qbj->cqj", c, el.curls(pts))
            out["curl"] = np.einsum("cij,cqj->cqi", mesh.jacobians[cells], cu) / mesh.det[cells][:, None, None]
    return out


def _jump_norm_sq(dm, coeffs, exact, norm, gamma, deg):
    mesh = dm.mesh
    s_pts, s_w = _facet_rule(mesh.dim, deg)
    cells, _ = mesh.facet_cells
    normals = mesh.facet_normals()
    hE = mesh.facet_sizes()
    total = 0.0
    what = ("value",) if norm == "broken_1h" else ("grad",)
    for F in (np.flatnonzero(cells[:, 1] >= 0), np.flatnonzero(cells[:, 1] < 0)):
        if F.size == 0:
            continue
        interior = cells[F[0], 1] >= 0
        n = normals[F]
        vals = []
        for s in range(2 if interior else 1):
            tab = _facet_side(dm, F, s, s_pts, what)
            c = coeffs[dm.cell_dofs[tab["cells"]]]
            if norm == "broken_1h":
                vals.append(np.einsum("fb,fqb->fq", c, tab["value"]))
            else:
                vals.append(np.einsum("fb,fqbi,fi->fq", c, tab["grad"], n))
            x = tab["x"]
        if interior:
            jump = vals[0] - vals[1]
        else:
            xf = x.reshape(-1, mesh.dim)
            if norm == "broken_1h":
                ue = np.asarray(exact.value(xf)).reshape(vals[0].shape)
            else:
                ue = np.einsum("fqi,fi->fq", np.asarray(exact.grad(xf)).reshape(x.shape), n)
            jump = ue - vals[0]
        wq = s_w[None, :] * hE[F, None]
        total += float(np.sum(gamma / hE[F, None] * wq * np.abs(jump) ** 2))
    return total

"""Simplicial meshes: structured domains, red refinement, newest vertex
bisection, Gmsh import and a small plain-text dump format.

Cells are stored with ascending vertex indices. Local sub-simplices are
enumerated with :func:`itertools.combinations`, so the local edge ``(i, j)``
of every cell runs from the lower to the higher global vertex index. Element
code relies on this to get globally consistent orientations for free.

Example
-------
>>> m = generate_structured("hexagon", 1)
>>> m.num_vertices, m.num_cells
(19, 24)
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

DOMAINS = ("unit_square_threeline", "hexagon", "unit_cube", "l_shape")


class MeshError(ValueError):
    pass


def local_subsimplices(dim: int, r: int) -> list[tuple[int, ...]]:
    """Local vertex tuples of the ``r``-vertex sub-simplices of a ``dim``-simplex."""
    return list(itertools.combinations(range(dim + 1), r))


def _unique_rows(rows: np.ndarray, nv: int):
    # rows are sorted per row; encode as a single integer key
    key = np.zeros(rows.shape[0], dtype=np.int64)
    for j in range(rows.shape[1]):
        key = key * nv + rows[:, j]
    ukey, first, inv = np.unique(key, return_index=True, return_inverse=True)
    return rows[first], inv.ravel(), ukey


@dataclass(frozen=True, eq=False)
class Mesh:
    """Conforming simplicial mesh in 2D or 3D.

    ``nvb_state`` (2D) holds, per triangle, the local index of the vertex
    opposite the refinement edge. ``bey_order`` (3D) holds the vertex order in
    which red refinement splits a tetrahedron. ``facet_tags`` maps sorted
    facet vertex tuples to a physical tag; facets not listed are untagged.
    """

    vertices: np.ndarray
    cells: np.ndarray
    level: int = 0
    h0: float = 1.0
    nvb_state: np.ndarray | None = None
    bey_order: np.ndarray | None = None
    facet_tags: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.ascontiguousarray(self.vertices, dtype=float)
        c = np.sort(np.asarray(self.cells, dtype=np.int64), axis=1)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "cells", c)
        if v.ndim != 2 or v.shape[1] not in (2, 3):
            raise MeshError("vertices must be an (nv, 2) or (nv, 3) array")
        if c.shape[1] != v.shape[1] + 1:
            raise MeshError("cells must be simplices of the vertex dimension")

    # -- basic sizes -------------------------------------------------------
    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    @property
    def num_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def num_cells(self) -> int:
        return self.cells.shape[0]

    @property
    def h(self) -> float:
        """Nominal mesh size ``h0 * 2**-level`` used to label tables."""
        return self.h0 * 0.5**self.level

    # -- geometry ----------------------------------------------------------
    @cached_property
    def jacobians(self) -> np.ndarray:
        x = self.vertices[self.cells]
        return np.transpose(x[:, 1:, :] - x[:, :1, :], (0, 2, 1))

    @cached_property
    def det(self) -> np.ndarray:
        return np.linalg.det(self.jacobians)

    @cached_property
    def inv_jacobians(self) -> np.ndarray:
        return np.linalg.inv(self.jacobians)

    @cached_property
    def volumes(self) -> np.ndarray:
        return np.abs(self.det) / (1.0 if self.dim == 1 else (2.0 if self.dim == 2 else 6.0))

    def map_points(self, ref_points: np.ndarray, cells=None) -> np.ndarray:
        """Map reference points ``(nq, d)`` to physical points ``(nc, nq, d)``."""
        J = self.jacobians if cells is None else self.jacobians[cells]
        x0 = self.vertices[self.cells[:, 0] if cells is None else self.cells[cells, 0]]
        return x0[:, None, :] + np.einsum("cij,qj->cqi", J, ref_points)

    # -- topology ----------------------------------------------------------
    @cached_property
    def _edge_data(self):
        loc = local_subsimplices(self.dim, 2)
        rows = np.concatenate([self.cells[:, list(e)] for e in loc])
        edges, inv, keys = _unique_rows(rows, self.num_vertices)
        cell_edges = inv.reshape(len(loc), self.num_cells).T
        return edges, np.ascontiguousarray(cell_edges), keys

    @property
    def edges(self) -> np.ndarray:
        return self._edge_data[0]

    @property
    def cell_edges(self) -> np.ndarray:
        return self._edge_data[1]

    def edge_index(self, a, b) -> np.ndarray:
        """Global index of the edges ``(a, b)`` (any vertex order)."""
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        key = np.minimum(a, b) * self.num_vertices + np.maximum(a, b)
        keys = self._edge_data[2]
        idx = np.searchsorted(keys, key)
        if np.any(idx >= len(keys)) or np.any(keys[np.minimum(idx, len(keys) - 1)] != key):
            raise MeshError("edge not in mesh")
        return idx

    @cached_property
    def _face_data(self):
        if self.dim != 3:
            raise MeshError("faces are only defined for tetrahedral meshes")
        loc = local_subsimplices(3, 3)
        rows = np.concatenate([self.cells[:, list(f)] for f in loc])
        faces, inv, _ = _unique_rows(rows, self.num_vertices)
        return faces, np.ascontiguousarray(inv.reshape(len(loc), self.num_cells).T)

    @property
    def faces(self) -> np.ndarray:
        return self._face_data[0]

    @property
    def cell_faces(self) -> np.ndarray:
        return self._face_data[1]

    def entities(self, dim: int) -> np.ndarray:
        """Vertex tuples of all entities of topological dimension ``dim``."""
        if dim == 0:
            return np.arange(self.num_vertices)[:, None]
        if dim == self.dim:
            return self.cells
        return self.edges if dim == 1 else self.faces

    def cell_entities(self, dim: int) -> np.ndarray:
        """Global entity indices per cell, local order from :func:`local_subsimplices`."""
        if dim == 0:
            return self.cells
        if dim == self.dim:
            return np.arange(self.num_cells)[:, None]
        return self.cell_edges if dim == 1 else self.cell_faces

    @property
    def facets(self) -> np.ndarray:
        return self.entities(self.dim - 1)

    @property
    def cell_facets(self) -> np.ndarray:
        return self.cell_entities(self.dim - 1)

    @cached_property
    def facet_cells(self) -> tuple[np.ndarray, np.ndarray]:
        """``(cells, local)`` arrays of shape ``(nf, 2)``; column 1 is -1 on the boundary.

        Column 0 holds the adjacent cell with the lower index. Local facet ``f``
        of a cell is opposite local vertex ``dim - f``.
        """
        cf = self.cell_facets
        nf = self.facets.shape[0]
        flat = cf.ravel()
        order = np.argsort(flat, kind="stable")
        counts = np.bincount(flat, minlength=nf)
        if np.any(counts > 2):
            raise MeshError("non-manifold mesh: facet shared by more than two cells")
        start = np.concatenate([[0], np.cumsum(counts)[:-1]])
        cells = -np.ones((nf, 2), dtype=np.int64)
        local = -np.ones((nf, 2), dtype=np.int64)
        first = order[start]
        cells[:, 0] = first // cf.shape[1]
        local[:, 0] = first % cf.shape[1]
        two = counts == 2
        second = order[start[two] + 1]
        cells[two, 1] = second // cf.shape[1]
        local[two, 1] = second % cf.shape[1]
        return cells, local

    @cached_property
    def boundary_facets(self) -> np.ndarray:
        return np.flatnonzero(self.facet_cells[0][:, 1] < 0)

    @cached_property
    def boundary_vertices(self) -> np.ndarray:
        return np.unique(self.facets[self.boundary_facets])

    def boundary_entity_mask(self, dim: int) -> np.ndarray:
        """Boolean mask over entities of dimension ``dim`` lying on the boundary."""
        if dim == self.dim:
            return np.zeros(self.num_cells, dtype=bool)
        if dim == self.dim - 1:
            mask = np.zeros(self.facets.shape[0], dtype=bool)
            mask[self.boundary_facets] = True
            return mask
        bv = np.zeros(self.num_vertices, dtype=bool)
        bv[self.boundary_vertices] = True
        if dim == 0:
            return bv
        # an edge of a 3D mesh is on the boundary iff it is an edge of a boundary face
        mask = np.zeros(self.edges.shape[0], dtype=bool)
        bf = self.faces[self.boundary_facets]
        for a, b in ((0, 1), (0, 2), (1, 2)):
            mask[self.edge_index(bf[:, a], bf[:, b])] = True
        return mask

    def facet_normals(self, facets=None) -> np.ndarray:
        """Unit normals pointing out of ``facet_cells[0][:, 0]``."""
        cells, local = self.facet_cells
        if facets is None:
            facets = np.arange(self.facets.shape[0])
        fv = self.vertices[self.facets[facets]]
        if self.dim == 2:
            t = fv[:, 1] - fv[:, 0]
            n = np.stack([t[:, 1], -t[:, 0]], axis=1)
        else:
            n = np.cross(fv[:, 1] - fv[:, 0], fv[:, 2] - fv[:, 0])
        n /= np.linalg.norm(n, axis=1)[:, None]
        c = cells[facets, 0]
        opp = self.dim - local[facets, 0]
        xo = self.vertices[self.cells[c, opp]]
        flip = np.einsum("ij,ij->i", xo - fv[:, 0], n) > 0
        n[flip] *= -1
        return n

    def facet_sizes(self, facets=None) -> np.ndarray:
        if facets is None:
            facets = np.arange(self.facets.shape[0])
        fv = self.vertices[self.facets[facets]]
        if self.dim == 2:
            return np.linalg.norm(fv[:, 1] - fv[:, 0], axis=1)
        return 0.5 * np.linalg.norm(np.cross(fv[:, 1] - fv[:, 0], fv[:, 2] - fv[:, 0]), axis=1)

    def renumbered(self, perm: np.ndarray) -> "Mesh":
        """Same mesh with vertex ``i`` moved to position ``perm[i]``."""
        perm = np.asarray(perm)
        verts = np.empty_like(self.vertices)
        verts[perm] = self.vertices
        new = Mesh(verts, perm[self.cells], level=self.level, h0=self.h0,
                   facet_tags={tuple(sorted(int(perm[v]) for v in k)): t
                               for k, t in self.facet_tags.items()})
        if self.dim == 2:
            new = replace(new, nvb_state=longest_edge_state(new))
        else:
            new = replace(new, bey_order=new.cells.copy())
        return new


@dataclass(frozen=True)
class MeshStats:
    h_max: float
    h_min: float
    num_vertices: int
    num_cells: int
    num_facets: int
    shape_regularity: float


def mesh_stats(mesh: Mesh) -> MeshStats:
    e = mesh.vertices[mesh.edges]
    lengths = np.linalg.norm(e[:, 1] - e[:, 0], axis=1)
    cell_len = lengths[mesh.cell_edges]
    diam = cell_len.max(axis=1)
    fs = mesh.facet_sizes()[mesh.cell_facets].sum(axis=1)
    # inradius = d * |T| / |boundary of T|
    inradius = mesh.dim * mesh.volumes / fs
    return MeshStats(
        h_max=float(lengths.max()),
        h_min=float(lengths.min()),
        num_vertices=mesh.num_vertices,
        num_cells=mesh.num_cells,
        num_facets=int(mesh.facets.shape[0]),
        shape_regularity=float(np.max(diam / inradius)),
    )


def longest_edge_state(mesh: Mesh) -> np.ndarray:
    """Initial NVB labelling: refinement edge = longest edge (first on ties)."""
    x = mesh.vertices[mesh.cells]
    # local vertex i is opposite the edge formed by the other two
    opp_len = np.stack([
        np.linalg.norm(x[:, 2] - x[:, 1], axis=1),
        np.linalg.norm(x[:, 2] - x[:, 0], axis=1),
        np.linalg.norm(x[:, 1] - x[:, 0], axis=1),
    ], axis=1)
    scale = opp_len.max(axis=1, keepdims=True)
    # round away floating noise so that congruent edges tie deterministically
    return np.argmax(np.round(opp_len / scale, 12), axis=1)


def _with_refinement_state(mesh: Mesh) -> Mesh:
    if mesh.dim == 2 and mesh.nvb_state is None:
        return replace(mesh, nvb_state=longest_edge_state(mesh))
    if mesh.dim == 3 and mesh.bey_order is None:
        return replace(mesh, bey_order=mesh.cells.copy())
    return mesh


# -- structured domains ----------------------------------------------------

def _initial_mesh(domain: str) -> Mesh:
    if domain == "unit_square_threeline":
        v = [[0, 0], [1, 0], [0, 1], [1, 1]]
        c = [[0, 1, 3], [0, 2, 3]]
    elif domain == "hexagon":
        th = np.arange(6) * np.pi / 3
        v = np.vstack([[0.0, 0.0], np.stack([np.sin(th), np.cos(th)], axis=1)])
        c = [[0, 1 + i, 1 + (i + 1) % 6] for i in range(6)]
    elif domain == "l_shape":
        v = [[-1, -1], [0, -1], [-1, 0], [0, 0], [1, 0], [-1, 1], [0, 1], [1, 1]]
        c = [[0, 1, 3], [0, 2, 3], [2, 3, 5], [3, 5, 6], [3, 4, 7], [3, 6, 7]]
    elif domain == "unit_cube":
        v = [[i & 1, (i >> 1) & 1, (i >> 2) & 1] for i in range(8)]
        c = []
        for p in itertools.permutations(range(3)):
            idx, path = 0, [0]
            for ax in p:
                idx += 1 << ax
                path.append(idx)
            c.append(path)
    else:
        raise MeshError(f"unknown domain {domain!r}; expected one of {DOMAINS}")
    mesh = Mesh(np.asarray(v, dtype=float), np.asarray(c))
    if domain == "unit_cube":
        # Kuhn paths are ascending with this vertex numbering
        return replace(mesh, bey_order=np.asarray(c, dtype=np.int64))
    return _with_refinement_state(mesh)


def generate_structured(domain: str, level: int) -> Mesh:
    """Documented initial mesh of ``domain`` refined uniformly ``level`` times."""
    if level < 0:
        raise MeshError("level must be nonnegative")
    mesh = _initial_mesh(domain)
    for _ in range(level):
        mesh = uniform_refine(mesh)
    return mesh


# -- uniform (red) refinement ----------------------------------------------

def _refine_tags(mesh: Mesh, mid: np.ndarray) -> dict:
    if not mesh.facet_tags:
        return {}
    out = {}
    for key, tag in mesh.facet_tags.items():
        if mesh.dim == 2:
            a, b = key
            m = int(mid[mesh.edge_index(a, b)])
            out[tuple(sorted((a, m)))] = tag
            out[tuple(sorted((m, b)))] = tag
        else:
            a, b, c = key
            mab, mac, mbc = (int(mid[mesh.edge_index(p, q)]) for p, q in ((a, b), (a, c), (b, c)))
            for f in ((a, mab, mac), (b, mab, mbc), (c, mac, mbc), (mab, mac, mbc)):
                out[tuple(sorted(f))] = tag
    return out


def uniform_refine(mesh: Mesh) -> Mesh:
    """Red refinement: 4 children per triangle, 8 per tetrahedron (Bey's rule)."""
    mesh = _with_refinement_state(mesh)
    nv = mesh.num_vertices
    e = mesh.edges
    mid = nv + np.arange(e.shape[0])
    verts = np.vstack([mesh.vertices, 0.5 * (mesh.vertices[e[:, 0]] + mesh.vertices[e[:, 1]])])
    tags = _refine_tags(mesh, mid)
    if mesh.dim == 2:
        v0, v1, v2 = mesh.cells.T
        m01, m02, m12 = (mid[mesh.cell_edges[:, j]] for j in range(3))
        children = np.concatenate([
            np.stack([v0, m01, m02], 1), np.stack([m01, v1, m12], 1),
            np.stack([m02, m12, v2], 1), np.stack([m01, m02, m12], 1)])
        new = Mesh(verts, children, level=mesh.level + 1, h0=mesh.h0, facet_tags=tags)
        return replace(new, nvb_state=longest_edge_state(new))
    o = mesh.bey_order
    x = [o[:, i] for i in range(4)]
    m = {}
    for i, j in itertools.combinations(range(4), 2):
        m[i, j] = mid[mesh.edge_index(x[i], x[j])]
    kids = [
        (x[0], m[0, 1], m[0, 2], m[0, 3]),
        (m[0, 1], x[1], m[1, 2], m[1, 3]),
        (m[0, 2], m[1, 2], x[2], m[2, 3]),
        (m[0, 3], m[1, 3], m[2, 3], x[3]),
        (m[0, 1], m[0, 2], m[0, 3], m[1, 3]),
        (m[0, 1], m[0, 2], m[1, 2], m[1, 3]),
        (m[0, 2], m[0, 3], m[1, 3], m[2, 3]),
        (m[0, 2], m[1, 2], m[1, 3], m[2, 3]),
    ]
    order = np.concatenate([np.stack(k, 1) for k in kids])
    new = Mesh(verts, order, level=mesh.level + 1, h0=mesh.h0, facet_tags=tags)
    return replace(new, bey_order=order)


# -- newest vertex bisection -------------------------------------------------

def bisect(mesh: Mesh, marked) -> Mesh:
    """Refine ``marked`` triangles by newest vertex bisection plus conforming closure."""
    if mesh.dim != 2:
        raise MeshError("newest vertex bisection is implemented for triangles only")
    mesh = _with_refinement_state(mesh)
    marked = np.unique(np.asarray(list(marked) if not isinstance(marked, np.ndarray) else marked,
                                  dtype=np.int64))
    if marked.size == 0:
        return mesh
    ce = mesh.cell_edges
    # local edge j in combinations order is opposite local vertex 2 - j
    ref_local = 2 - mesh.nvb_state
    ref_edge = ce[np.arange(mesh.num_cells), ref_local]
    emark = np.zeros(mesh.edges.shape[0], dtype=bool)
    emark[ref_edge[marked]] = True
    while True:
        need = emark[ce].any(axis=1) & ~emark[ref_edge]
        if not need.any():
            break
        emark[ref_edge[need]] = True

    nv = mesh.num_vertices
    split = np.flatnonzero(emark)
    mid = -np.ones(mesh.edges.shape[0], dtype=np.int64)
    mid[split] = nv + np.arange(split.size)
    e = mesh.edges[split]
    verts = np.vstack([mesh.vertices, 0.5 * (mesh.vertices[e[:, 0]] + mesh.vertices[e[:, 1]])])

    # triangles as (newest, p1, p2) with refinement edge (p1, p2)
    c = mesh.cells
    idx = np.arange(mesh.num_cells)
    s = mesh.nvb_state
    tri = np.stack([c[idx, s], c[idx, (s + 1) % 3], c[idx, (s + 2) % 3]], axis=1)

    def edge_mid(a, b):
        return mid[mesh.edge_index(a, b)]

    done = []
    for _ in range(2):
        mm = np.full(tri.shape[0], -1, dtype=np.int64)
        orig = (tri[:, 1] < nv) & (tri[:, 2] < nv)
        mm[orig] = edge_mid(tri[orig, 1], tri[orig, 2])
        go = mm >= 0
        done.append(tri[~go])
        t = tri[go]
        m_ = mm[go]
        tri = np.concatenate([
            np.stack([m_, t[:, 0], t[:, 1]], axis=1),
            np.stack([m_, t[:, 2], t[:, 0]], axis=1),
        ])
    done.append(tri)
    tri = np.concatenate(done)
    cells = np.sort(tri, axis=1)
    state = np.argmax(cells == tri[:, :1], axis=1)

    tags = {}
    for key, tag in mesh.facet_tags.items():
        a, b = key
        k = mid[mesh.edge_index(a, b)]
        if k < 0:
            tags[key] = tag
        else:
            tags[tuple(sorted((a, int(k))))] = tag
            tags[tuple(sorted((int(k), b)))] = tag
    return Mesh(verts, cells, level=mesh.level, h0=mesh.h0, nvb_state=state, facet_tags=tags)


def is_conforming(mesh: Mesh) -> bool:
    """Facet incidence check plus hanging-node check on facet midpoints."""
    try:
        cells, _ = mesh.facet_cells
    except MeshError:
        return False
    boundary = mesh.facets[cells[:, 1] < 0]
    # a hanging node shows up as a vertex sitting inside a boundary-labelled facet
    if mesh.dim == 2:
        pts = mesh.vertices
        a = pts[boundary[:, 0]]
        b = pts[boundary[:, 1]]
        mids = 0.5 * (a + b)
        key = {tuple(np.round(p, 12)) for p in pts}
        if any(tuple(np.round(p, 12)) in key for p in mids):
            return False
    return bool(np.all(mesh.volumes > 0))


# -- plain-text dump ---------------------------------------------------------

def write_mesh_text(mesh: Mesh) -> str:
    lines = [str(mesh.dim), f"{mesh.num_vertices} {mesh.num_cells}"]
    lines += [" ".join(repr(float(x)) for x in p) for p in mesh.vertices]
    lines += [" ".join(str(int(i)) for i in c) for c in mesh.cells]
    return "\n".join(lines) + "\n"


def read_mesh_text(text: str) -> Mesh:
    tok = text.split()
    dim = int(tok[0])
    nv, nc = int(tok[1]), int(tok[2])
    pos = 3
    verts = np.array(tok[pos:pos + nv * dim], dtype=float).reshape(nv, dim)
    pos += nv * dim
    cells = np.array(tok[pos:pos + nc * (dim + 1)], dtype=np.int64).reshape(nc, dim + 1)
    return _with_refinement_state(Mesh(verts, cells))


# -- Gmsh import ---------------------------------------------------------------

class MshError(MeshError):
    """Malformed or unsupported .msh input; ``code`` names the failure kind."""

    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code


_MSH_NODES = {15: 1, 1: 2, 2: 3, 4: 4}  # point, line, triangle, tetrahedron
_MSH_DIM = {15: 0, 1: 1, 2: 2, 4: 3}


def _msh_sections(text: str) -> dict:
    sections = {}
    lines = text.splitlines()
    i = 0
    while i < len(lines):
        line = lines[i].strip()
        if line.startswith("$") and not line.startswith("$End"):
            name = line[1:]
            end = f"$End{name}"
            j = i + 1
            while j < len(lines) and lines[j].strip() != end:
                j += 1
            if j == len(lines):
                raise MshError("malformed", f"section ${name} is not closed")
            sections[name] = lines[i + 1:j]
            i = j
        i += 1
    return sections


def read_msh(text: str) -> Mesh:
    """Read an ASCII Gmsh file (format 2.2 or 4.1) of triangles or tetrahedra.

    The highest-dimensional simplices become cells; elements one dimension
    lower provide facet tags (physical tag when present, else entity tag).
    Point and other lower-dimensional elements are ignored.
    """
    sec = _msh_sections(text)
    if "MeshFormat" not in sec or not sec["MeshFormat"]:
        raise MshError("bad_header", "missing $MeshFormat")
    head = sec["MeshFormat"][0].split()
    if len(head) < 3:
        raise MshError("bad_header", "incomplete $MeshFormat line")
    if head[1] != "0":
        raise MshError("binary", "binary .msh files are not supported")
    version = head[0]
    try:
        if version.startswith("2."):
            nodes, elems = _msh2(sec)
        elif version.startswith("4."):
            nodes, elems = _msh4(sec)
        else:
            raise MshError("bad_header", f"unsupported format version {version}")
    except (ValueError, IndexError, KeyError) as exc:
        if isinstance(exc, MshError):
            raise
        raise MshError("malformed", str(exc)) from None
    by_dim = {}
    for etype, tag, conn in elems:
        by_dim.setdefault(_MSH_DIM[etype], []).append((tag, conn))
    cdim = 3 if 3 in by_dim else (2 if 2 in by_dim else None)
    if cdim is None:
        raise MshError("no_cells", "file contains no triangles or tetrahedra")
    cells_tags = np.array([c for _, c in by_dim[cdim]], dtype=np.int64)
    used = np.unique(cells_tags)
    coords = np.array([nodes[t] for t in used])[:, :cdim]
    remap = {int(t): i for i, t in enumerate(used)}
    cells = np.vectorize(remap.__getitem__)(cells_tags)
    tags = {}
    for tag, conn in by_dim.get(cdim - 1, []):
        if all(int(t) in remap for t in conn):
            tags[tuple(sorted(remap[int(t)] for t in conn))] = tag
    mesh = Mesh(coords, cells, facet_tags=tags)
    mesh = _orient_check(mesh)
    return _with_refinement_state(mesh)


def _orient_check(mesh: Mesh) -> Mesh:
    if np.any(np.abs(mesh.det) < 1e-14):
        raise MshError("malformed", "degenerate cell")
    return mesh


def _msh2(sec):
    nl = sec["Nodes"]
    n = int(nl[0])
    nodes = {}
    for line in nl[1:n + 1]:
        p = line.split()
        nodes[int(p[0])] = np.array([float(x) for x in p[1:4]])
    el = sec["Elements"]
    ne = int(el[0])
    elems = []
    for line in el[1:ne + 1]:
        p = [int(x) for x in line.split()]
        etype, ntags = p[1], p[2]
        if etype not in _MSH_NODES:
            raise MshError("unsupported_element", f"element type {etype}")
        tags = p[3:3 + ntags]
        conn = p[3 + ntags:]
        if len(conn) != _MSH_NODES[etype]:
            raise MshError("malformed", f"element {p[0]} has {len(conn)} nodes")
        elems.append((etype, tags[0] if tags else 0, conn))
    return nodes, elems


def _msh4(sec):
    phys = {}
    if "Entities" in sec:
        ent = sec["Entities"]
        counts = [int(x) for x in ent[0].split()]
        row = 1
        for dim, cnt in enumerate(counts):
            for _ in range(cnt):
                p = ent[row].split()
                row += 1
                tag = int(p[0])
                k = 4 if dim == 0 else 7
                nph = int(p[k])
                if nph:
                    phys[(dim, tag)] = int(p[k + 1])
    nl = sec["Nodes"]
    nblocks = int(nl[0].split()[0])
    row = 1
    nodes = {}
    for _ in range(nblocks):
        _, _, param, cnt = (int(x) for x in nl[row].split())
        row += 1
        if param:
            raise MshError("malformed", "parametric node coordinates are not supported")
        ids = [int(nl[row + i]) for i in range(cnt)]
        row += cnt
        for i in range(cnt):
            nodes[ids[i]] = np.array([float(x) for x in nl[row + i].split()[:3]])
        row += cnt
    el = sec["Elements"]
    nblocks = int(el[0].split()[0])
    row = 1
    elems = []
    for _ in range(nblocks):
        edim, etag, etype, cnt = (int(x) for x in el[row].split())
        row += 1
        if etype not in _MSH_NODES:
            raise MshError("unsupported_element", f"element type {etype}")
        tag = phys.get((edim, etag), etag)
        for i in range(cnt):
            p = [int(x) for x in el[row + i].split()]
            if len(p) - 1 != _MSH_NODES[etype]:
                raise MshError("malformed", f"element {p[0]} has {len(p) - 1} nodes")
            elems.append((etype, tag, p[1:]))
        row += cnt
    return nodes, elems


def write_msh(mesh: Mesh) -> str:
    """ASCII Gmsh 4.1 text with one entity block of cells (node tags start at 1)."""
    d = mesh.dim
    etype = 2 if d == 2 else 4
    nv, nc = mesh.num_vertices, mesh.num_cells
    xyz = np.zeros((nv, 3))
    xyz[:, :d] = mesh.vertices
    lines = ["$MeshFormat", "4.1 0 8", "$EndMeshFormat", "$Nodes", f"1 {nv} 1 {nv}", f"{d} 1 0 {nv}"]
    lines += [str(i + 1) for i in range(nv)]
    lines += [" ".join(repr(float(x)) for x in p) for p in xyz]
    lines += ["$EndNodes", "$Elements", f"1 {nc} 1 {nc}", f"{d} 1 {etype} {nc}"]
    lines += [" ".join(str(int(t)) for t in [i + 1, *(c + 1)]) for i, c in enumerate(mesh.cells)]
    lines += ["$EndElements"]
    return "\n".join(lines) + "\n"


def _hexagon_points(h, rng):
    corners = np.array([[np.sin(i * np.pi / 3), np.cos(i * np.pi / 3)] for i in range(6)])
    nseg = max(1, int(round(1.0 / h)))
    bnd = [corners[i] + t * (corners[(i + 1) % 6] - corners[i])
           for i in range(6) for t in np.arange(nseg) / nseg]
    # jittered triangular lattice, kept well inside
    ys = np.arange(-1, 1 + h, h * np.sqrt(3) / 2)
    pts = []
    for j, y in enumerate(ys):
        for x in np.arange(-1 + 0.5 * h * (j % 2), 1 + h, h):
            pts.append((x, y))
    pts = np.array(pts) + rng.uniform(-0.2 * h, 0.2 * h, (len(pts), 2))
    # hexagon = intersection of three slabs |a_i . x| <= sqrt(3)/2 (apothem)
    normals = np.array([[1, 0], [0.5, np.sqrt(3) / 2], [-0.5, np.sqrt(3) / 2]])
    inside = np.all(np.abs(pts @ normals.T) <= np.sqrt(3) / 2 - 0.5 * h, axis=1)
    return np.vstack([np.array(bnd), pts[inside]])


def _cube_points(h, rng):
    n = max(1, int(round(1.0 / h)))
    g = np.arange(n + 1) / n
    X = np.stack(np.meshgrid(g, g, g, indexing="ij"), -1).reshape(-1, 3)
    on = np.isclose(X, 0) | np.isclose(X, 1)
    jit = rng.uniform(-0.2 * h, 0.2 * h, X.shape)
    jit[on] = 0.0  # boundary points stay on their faces, edges and corners
    return X + jit


def jittered_delaunay(domain: str, h: float, seed: int = 0) -> Mesh:
    """Unstructured Delaunay mesh of a convex domain from jittered lattice points.

    Stand-in for a frontal mesh generator when none is installed: the
    triangulation has no local symmetry pattern, which is what the
    unstructured experiments need.
    """
    from scipy.spatial import Delaunay

    rng = np.random.default_rng(seed)
    if domain == "hexagon":
        pts = _hexagon_points(h, rng)
    elif domain == "unit_cube":
        pts = _cube_points(h, rng)
    else:
        raise MeshError("jittered meshes are available for 'hexagon' and 'unit_cube'")
    tri = Delaunay(pts)
    cells = tri.simplices
    vol = np.abs(np.linalg.det(pts[cells[:, 1:]] - pts[cells[:, :1]]))
    cells = cells[vol > 1e-10 * h ** pts.shape[1]]
    used = np.unique(cells)
    remap = -np.ones(len(pts), dtype=np.int64)
    remap[used] = np.arange(used.size)
    return _with_refinement_state(Mesh(pts[used], remap[cells]))

from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smoothsc.mesh import (Mesh, MeshError, MshError, bisect, generate_structured, is_conforming,
                           jittered_delaunay, mesh_stats, read_mesh_text, read_msh, uniform_refine,
                           write_mesh_text, write_msh)

FIX = Path(__file__).parent / "fixtures"


def _incidence_ok(mesh):
    cells, _ = mesh.facet_cells
    return np.all(cells[:, 0] >= 0)


@pytest.mark.parametrize("domain,level,nv,nc", [
    ("unit_square_threeline", 0, 4, 2),
    ("unit_square_threeline", 1, 9, 8),
    ("hexagon", 0, 7, 6),
    ("hexagon", 1, 19, 24),
    ("unit_cube", 0, 8, 6),
    ("unit_cube", 1, 27, 48),
    ("l_shape", 0, 8, 6),
])
def test_structured_counts(domain, level, nv, nc):
    m = generate_structured(domain, level)
    assert (m.num_vertices, m.num_cells) == (nv, nc)
    assert np.all(np.diff(m.cells, axis=1) > 0)
    assert np.all(m.volumes > 0)


def test_unknown_domain():
    with pytest.raises(MeshError):
        generate_structured("disk", 0)


@pytest.mark.parametrize("domain,measure", [("unit_square_threeline", 1.0), ("hexagon", 1.5 * np.sqrt(3)),
                                            ("unit_cube", 1.0), ("l_shape", 3.0)])
def test_uniform_refine_measure_and_h(domain, measure):
    m = generate_structured(domain, 0)
    for _ in range(2):
        r = uniform_refine(m)
        assert abs(r.volumes.sum() - measure) <= 1e-13 * measure
        assert mesh_stats(r).h_max == pytest.approx(mesh_stats(m).h_max / 2, rel=1e-12)
        assert is_conforming(r) and _incidence_ok(r)
        m = r


def test_cube_48_tets_volume():
    m = uniform_refine(generate_structured("unit_cube", 0))
    assert m.num_cells == 48
    assert abs(m.volumes.sum() - 1.0) <= 1e-14


def test_bisect_empty_marking_identity():
    m = generate_structured("unit_square_threeline", 1)
    b = bisect(m, [])
    assert np.array_equal(b.cells, m.cells) and np.allclose(b.vertices, m.vertices)


def test_bisect_one_triangle_closes_with_neighbour():
    m = generate_structured("unit_square_threeline", 0)
    b = bisect(m, [0])
    assert b.num_cells == 4
    assert is_conforming(b)
    assert abs(b.volumes.sum() - 1.0) < 1e-14


def test_bisect_rejects_3d():
    with pytest.raises(MeshError):
        bisect(generate_structured("unit_cube", 0), [0])


def test_bisect_shape_regularity_bounded():
    m = generate_structured("unit_square_threeline", 0)
    q0 = mesh_stats(m).shape_regularity
    for _ in range(20):
        m = bisect(m, np.arange(m.num_cells))
    assert mesh_stats(m).shape_regularity <= 2 * q0
    assert abs(m.volumes.sum() - 1.0) < 1e-12


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_nvb_random_marking_conforming(seed):
    rng = np.random.default_rng(seed)
    m = generate_structured("l_shape", 0)
    for _ in range(6):
        marked = np.flatnonzero(rng.random(m.num_cells) < 0.3)
        m = bisect(m, marked)
        assert is_conforming(m) and _incidence_ok(m)
        assert np.all(np.diff(m.cells, axis=1) > 0)
    assert abs(m.volumes.sum() - 3.0) < 1e-12


def test_stats_examples():
    tri = Mesh(np.array([[0.0, 0], [1, 0], [0, 1]]), np.array([[0, 1, 2]]))
    assert mesh_stats(tri).h_max == pytest.approx(np.sqrt(2))
    hexm = generate_structured("hexagon", 0)
    s = mesh_stats(hexm)
    assert s.h_max == pytest.approx(1.0)
    assert s.h_min <= s.h_max
    # equilateral triangles reach the 2D lower bound 2 sqrt(3)
    assert s.shape_regularity == pytest.approx(2 * np.sqrt(3))


def test_stats_invariant_under_renumbering():
    m = generate_structured("hexagon", 2)
    perm = np.random.default_rng(0).permutation(m.num_vertices)
    a, b = mesh_stats(m), mesh_stats(m.renumbered(perm))
    assert a.h_max == pytest.approx(b.h_max) and a.shape_regularity == pytest.approx(b.shape_regularity)
    assert a.num_facets == b.num_facets


def test_text_dump_roundtrip():
    m = generate_structured("unit_cube", 1)
    r = read_mesh_text(write_mesh_text(m))
    assert np.array_equal(r.cells, m.cells) and np.allclose(r.vertices, m.vertices)


def test_msh_fixtures_both_versions_identical():
    a = read_msh((FIX / "square_v22.msh").read_text())
    b = read_msh((FIX / "square_v41.msh").read_text())
    assert (a.num_cells, a.num_vertices) == (2, 4)
    assert np.array_equal(a.cells, b.cells)
    assert np.allclose(a.vertices, b.vertices)
    assert a.facet_tags == b.facet_tags
    assert set(a.facet_tags.values()) == {1}


@pytest.mark.parametrize("text,code", [
    ("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n1\n1 0 0 0\n$EndNodes\n$Elements\n0\n$EndElements\n",
     "no_cells"),
    ("$MeshFormat\n2.2 1 8\n$EndMeshFormat\n", "binary"),
    ("hello\n", "bad_header"),
    ("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n4\n1 0 0 0\n2 1 0 0\n3 1 1 0\n4 0 1 0\n$EndNodes\n"
     "$Elements\n1\n1 3 2 0 1 1 2 3 4\n$EndElements\n", "unsupported_element"),
])
def test_msh_errors(text, code):
    with pytest.raises(MshError) as exc:
        read_msh(text)
    assert exc.value.code == code


@pytest.mark.parametrize("domain,measure", [("hexagon", 1.5 * np.sqrt(3)), ("unit_cube", 1.0)])
def test_jittered_delaunay_roundtrip(domain, measure):
    m = jittered_delaunay(domain, 0.25, seed=3)
    assert abs(m.volumes.sum() - measure) < 1e-12
    assert is_conforming(m) and _incidence_ok(m)
    r = read_msh(write_msh(m))
    assert np.array_equal(r.cells, m.cells) and np.allclose(r.vertices, m.vertices)

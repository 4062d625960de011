import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nchmm.mesh import SIDES, build_uniform_mesh, opposite_face_pairs

counts = st.integers(min_value=1, max_value=9)


def test_two_by_two_counts():
    m = build_uniform_mesh((0, 0), (1, 1), 2, 2)
    assert (m.n_elements, m.n_vertices, m.n_faces, m.n_interior_faces) == (4, 9, 12, 4)


def test_single_cell():
    m = build_uniform_mesh((0, 0), (1, 1), 1, 1)
    assert (m.n_elements, m.n_faces, m.n_interior_faces) == (1, 4, 0)


def test_small_cells_have_uniform_width():
    eps = 1e-3
    m = build_uniform_mesh((0.3, 0.4), (eps, eps), 8, 8)
    assert m.n_elements == 64
    assert np.allclose(np.diff(m.x_lines), eps / 8, rtol=1e-12)
    assert np.allclose(np.diff(m.y_lines), eps / 8, rtol=1e-12)


@pytest.mark.parametrize("bad", [(0, 1), (1, 0), (-2, 3)])
def test_invalid_counts(bad):
    with pytest.raises(ValueError):
        build_uniform_mesh((0, 0), (1, 1), *bad)


@pytest.mark.parametrize("extent", [(0.0, 1.0), (1.0, -1.0)])
def test_invalid_extent(extent):
    with pytest.raises(ValueError):
        build_uniform_mesh((0, 0), extent, 2, 2)


def test_face_midpoints():
    m = build_uniform_mesh((0, 0), (1, 1), 1, 1)
    assert np.allclose(m.face_midpoint(m.boundary_faces("bottom")[0]), (0.5, 0.0))
    m2 = build_uniform_mesh((0, 0), (1, 1), 2, 2)
    # vertical face (i=1, j=0): central line, lower half
    assert np.allclose(m2.face_midpoint(1), (0.5, 0.25))
    with pytest.raises(IndexError):
        m2.face_midpoint(m2.n_faces)


def test_opposite_pairs_small():
    assert len(opposite_face_pairs(build_uniform_mesh((0, 0), (1, 1), 2, 2)).pairs) == 4
    assert len(opposite_face_pairs(build_uniform_mesh((0, 0), (1, 1), 1, 1)).pairs) == 2
    p = opposite_face_pairs(build_uniform_mesh((0, 0), (1, 1), 4, 2))
    assert len(p.pairs) == 6
    assert len(p.left_right) == 2 and len(p.bottom_top) == 4


def test_element_local_layout():
    m = build_uniform_mesh((0, 0), (2, 1), 2, 1)
    # element 1 is the right cell; LL, LR, UR, UL vertices
    assert np.allclose(m.vertices[m.element_vertices[1]], [[1, 0], [2, 0], [2, 1], [1, 1]])
    mids = m.face_midpoints[m.element_faces[1]]  # bottom, right, top, left
    assert np.allclose(mids, [[1.5, 0], [2, 0.5], [1.5, 1], [1, 0.5]])


@given(counts, counts, st.floats(0.1, 5.0), st.floats(0.1, 5.0))
def test_count_invariants(nx, ny, Lx, Ly):
    m = build_uniform_mesh((0.0, 0.0), (Lx, Ly), nx, ny)
    assert m.n_elements == nx * ny
    assert m.n_vertices == (nx + 1) * (ny + 1)
    assert m.n_faces == nx * (ny + 1) + ny * (nx + 1)
    fe = m.face_elements
    shared = (fe >= 0).sum(axis=1)
    assert np.all((shared == 1) | (shared == 2))
    assert (shared == 2).sum() == (nx - 1) * ny + nx * (ny - 1)
    boundary = set()
    for s in SIDES:
        boundary |= set(m.boundary_faces(s).tolist())
    assert boundary == set(np.flatnonzero(shared == 1).tolist())
    assert np.isclose(m.n_elements * m.cell_area, Lx * Ly, rtol=1e-14)


@given(counts, counts)
def test_interior_neighbours_differ_by_one_index(nx, ny):
    m = build_uniform_mesh((0.0, 0.0), (1.0, 1.0), nx, ny)
    fe = m.face_elements
    inner = fe[(fe >= 0).all(axis=1)]
    ij = m.element_ij
    d = np.abs(ij[inner[:, 0]] - ij[inner[:, 1]]).sum(axis=1)
    assert np.all(d == 1)


@given(counts, counts, st.floats(-3, 3), st.floats(-3, 3))
def test_opposite_pairs_invariants(nx, ny, ox, oy):
    m = build_uniform_mesh((ox, oy), (1.5, 0.7), nx, ny)
    p = opposite_face_pairs(m)
    assert len(p.pairs) == nx + ny
    flat = p.pairs.ravel()
    assert len(set(flat.tolist())) == len(flat)
    mid = m.face_midpoints
    for a, b in p.left_right:
        assert np.isclose(mid[b, 0] - mid[a, 0], 1.5) and np.isclose(mid[a, 1], mid[b, 1])
    for a, b in p.bottom_top:
        assert np.isclose(mid[b, 1] - mid[a, 1], 0.7) and np.isclose(mid[a, 0], mid[b, 0])
    for f in flat:
        assert p.partner(p.partner(int(f))) == f


def test_partner_rejects_interior_face():
    m = build_uniform_mesh((0, 0), (1, 1), 2, 2)
    with pytest.raises(KeyError):
        opposite_face_pairs(m).partner(1)


def test_locate_and_contains():
    m = build_uniform_mesh((0, 0), (1, 1), 4, 4)
    e = m.locate(np.array([[0.3, 0.8], [1.0, 1.0], [0.0, 0.0]]))
    assert e.tolist() == [1 + 3 * 4, 15, 0]
    assert m.contains(5, m.element_centers[5])
    assert not m.contains(5, m.element_centers[6])

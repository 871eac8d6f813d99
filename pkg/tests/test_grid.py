import numpy as np
import pytest

from eddycurrent.errors import GridSizeError
from eddycurrent.grid import GridSpec, build_complex, restrict_interior


@pytest.mark.parametrize("n", [1, 2, 3, 5])
def test_counts_follow_formula(n):
    cx = build_complex(GridSpec.cube(n))
    assert cx.n_nodes == (n + 1) ** 3
    assert cx.n_edges == 3 * n * (n + 1) ** 2
    assert cx.n_faces == 3 * n * n * (n + 1)
    assert cx.n_cells == n ** 3


def test_single_cell_everything_is_boundary():
    cx = build_complex(GridSpec.cube(1))
    assert (cx.n_nodes, cx.n_edges, cx.n_faces, cx.n_cells) == (8, 12, 6, 1)
    assert len(cx.boundary_edges) == 12
    assert len(cx.interior_edges) == 0


def test_two_cells_per_axis():
    cx = build_complex(GridSpec.cube(2))
    assert (cx.n_nodes, cx.n_edges, cx.n_faces, cx.n_cells) == (27, 54, 36, 8)


@pytest.mark.parametrize("cells", [(1, 1, 1), (2, 3, 4), (4, 4, 4), (5, 1, 2)])
def test_exactness(cells):
    cx = build_complex(GridSpec(cells, (1.0, 2.0, 0.5)))
    assert abs(cx.C @ cx.G).max() == 0
    assert abs(cx.D @ cx.C).max() == 0
    for A in (cx.G, cx.C, cx.D):
        assert set(np.unique(A.data)) <= {-1, 1}


def test_incidence_orientation():
    # edges point along +axis: gradient of x1 gives hx on x-edges and 0 elsewhere
    cx = build_complex(GridSpec((3, 2, 2), (3.0, 1.0, 1.0)))
    g = cx.G @ cx.node_coords[:, 0]
    d = cx.edge_directions
    assert np.allclose(g[d == 0], 1.0)
    assert np.allclose(g[d != 0], 0.0)


def test_stokes_on_faces():
    # circulation of the field (-y, x, 0) / 2 around a z-face equals its area
    cx = build_complex(GridSpec((3, 3, 3), (1.0, 2.0, 3.0)))
    h = cx.spacing
    mid = cx.edge_midpoints
    d = cx.edge_directions
    e = np.where(d == 0, -0.5 * mid[:, 1] * h[0], np.where(d == 1, 0.5 * mid[:, 0] * h[1], 0.0))
    flux = cx.C @ e
    nz = cx.face_normals == 2
    assert np.allclose(flux[nz], h[0] * h[1])
    assert np.allclose(flux[~nz], 0.0)


def test_restrict_interior_examples():
    cx1 = build_complex(GridSpec.cube(1))
    assert not restrict_interior(cx1, np.ones(cx1.n_edges)).any()
    cx2 = build_complex(GridSpec.cube(2))
    r = restrict_interior(cx2, np.ones(cx2.n_edges))
    assert np.count_nonzero(r) == 6
    center = np.argmin(np.linalg.norm(cx2.node_coords - 0.5, axis=1))
    touching = cx2.G[:, center].nonzero()[0]
    assert set(np.flatnonzero(r)) == set(touching)


def test_restrict_interior_is_projection(rng):
    cx = build_complex(GridSpec.cube(3))
    f = rng.standard_normal(cx.n_edges)
    once = restrict_interior(cx, f)
    assert np.array_equal(restrict_interior(cx, once), once)
    assert np.array_equal(once[cx.interior_edges], f[cx.interior_edges])


def test_restrict_interior_length_mismatch():
    cx = build_complex(GridSpec.cube(2))
    with pytest.raises(ValueError):
        restrict_interior(cx, np.ones(cx.n_edges + 1))


def test_boundary_edges_lie_on_box_faces():
    cx = build_complex(GridSpec((2, 3, 4), (1.0, 1.5, 2.0)))
    mid = cx.edge_midpoints
    ext = np.array(cx.spec.extents)
    on_face = np.any(np.isclose(mid, 0.0) | np.isclose(mid, ext), axis=1)
    # an edge lies on a box face iff one of its transverse coordinates is extremal
    d = cx.edge_directions
    transverse = np.ones_like(on_face)
    for a in range(3):
        sel = d == a
        others = [b for b in range(3) if b != a]
        transverse[sel] = np.any(np.isclose(mid[sel][:, others], 0.0)
                                 | np.isclose(mid[sel][:, others], ext[others]), axis=1)
    expected = np.zeros(cx.n_edges, bool)
    expected[cx.boundary_edges] = True
    assert np.array_equal(transverse, expected)
    assert np.all(on_face[expected])


def test_invalid_specs():
    with pytest.raises(ValueError):
        GridSpec((0, 1, 1))
    with pytest.raises(ValueError):
        GridSpec((1, 1, 1), (1.0, -1.0, 1.0))
    with pytest.raises(GridSizeError):
        build_complex(GridSpec.cube(5000))


def test_ordering_is_x_fastest():
    cx = build_complex(GridSpec((3, 2, 2)))
    c = cx.node_coords
    assert np.all(np.diff(c[:4, 0]) > 0)
    assert c[4, 0] == 0.0 and c[4, 1] > 0


def test_summary_mentions_counts():
    s = build_complex(GridSpec.cube(2)).summary()
    assert "27" in s and "54" in s

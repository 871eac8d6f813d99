"""Staggered tensor grid on a box and its discrete de Rham complex.

Index ordering is lexicographic with x fastest. Edges are stored as all
x-directed edges, then y-directed, then z-directed; faces likewise grouped by
normal direction. Edges point in the +axis direction and faces are oriented
by their +axis normal, so every incidence entry is -1, 0 or +1.

Edge cochains hold circulations (line integrals) and face cochains hold
fluxes, which makes ``C @ G == 0`` and ``D @ C == 0`` hold in integer
arithmetic.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .errors import GridSizeError

_MAX_INDEX = np.iinfo(np.int32).max


@dataclass(frozen=True)
class GridSpec:
    """Cell counts and side lengths of an axis-aligned box ``[0, Lx] x [0, Ly] x [0, Lz]``."""

    cells: tuple[int, int, int]
    extents: tuple[float, float, float] = (1.0, 1.0, 1.0)

    def __post_init__(self):
        cells = tuple(int(c) for c in np.broadcast_to(self.cells, 3))
        extents = tuple(float(e) for e in np.broadcast_to(self.extents, 3))
        if any(c < 1 for c in cells):
            raise ValueError(f"cell counts must be >= 1, got {cells}")
        if any(not np.isfinite(e) or e <= 0 for e in extents):
            raise ValueError(f"extents must be positive, got {extents}")
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "extents", extents)

    @classmethod
    def cube(cls, n: int, side: float = 1.0) -> "GridSpec":
        return cls((n, n, n), (side, side, side))

    @property
    def spacing(self) -> np.ndarray:
        return np.asarray(self.extents) / np.asarray(self.cells)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def n_cells(self) -> int:
        nx, ny, nz = self.cells
        return nx * ny * nz


def _diff(n: int) -> sp.csr_matrix:
    """1D incidence from n+1 points to n segments."""
    return sp.diags([-np.ones(n, dtype=np.int64), np.ones(n, dtype=np.int64)], [0, 1],
                    shape=(n, n + 1), format="csr", dtype=np.int64)


def _eye(n: int) -> sp.csr_matrix:
    return sp.identity(n, dtype=np.int64, format="csr")


def _kron3(az, ay, ax) -> sp.csr_matrix:
    # x fastest: the x factor is the rightmost Kronecker operand
    return sp.kron(az, sp.kron(ay, ax, format="csr"), format="csr")


@dataclass(frozen=True, eq=False)
class Complex:
    """Incidence operators and boundary tags of the staggered grid.

    Attributes
    ----------
    G, C, D : scipy.sparse.csr_matrix
        node->edge, edge->face and face->cell incidence (int64).
    boundary_nodes, boundary_edges, boundary_faces : ndarray
        Sorted indices of entities lying on the box surface.
    """

    spec: GridSpec
    G: sp.csr_matrix
    C: sp.csr_matrix
    D: sp.csr_matrix
    boundary_nodes: np.ndarray
    boundary_edges: np.ndarray
    boundary_faces: np.ndarray
    _shapes: dict = field(repr=False)

    # counts -----------------------------------------------------------------
    @property
    def n_nodes(self) -> int:
        return self.G.shape[1]

    @property
    def n_edges(self) -> int:
        return self.G.shape[0]

    @property
    def n_faces(self) -> int:
        return self.C.shape[0]

    @property
    def n_cells(self) -> int:
        return self.D.shape[0]

    @property
    def spacing(self) -> np.ndarray:
        return self.spec.spacing

    def edge_shapes(self):
        """Array shapes (x, y, z index order) of the x-, y- and z-edge blocks."""
        return self._shapes["edges"]

    def face_shapes(self):
        return self._shapes["faces"]

    @property
    def node_shape(self) -> tuple[int, int, int]:
        nx, ny, nz = self.spec.cells
        return (nx + 1, ny + 1, nz + 1)

    @cached_property
    def edge_offsets(self) -> np.ndarray:
        sizes = [int(np.prod(s)) for s in self.edge_shapes()]
        return np.concatenate([[0], np.cumsum(sizes)])

    @cached_property
    def face_offsets(self) -> np.ndarray:
        sizes = [int(np.prod(s)) for s in self.face_shapes()]
        return np.concatenate([[0], np.cumsum(sizes)])

    # interior handling --------------------------------------------------------
    @cached_property
    def interior_edges(self) -> np.ndarray:
        mask = np.ones(self.n_edges, dtype=bool)
        mask[self.boundary_edges] = False
        return np.flatnonzero(mask)

    @cached_property
    def interior_nodes(self) -> np.ndarray:
        mask = np.ones(self.n_nodes, dtype=bool)
        mask[self.boundary_nodes] = False
        return np.flatnonzero(mask)

    @cached_property
    def interior_edge_selector(self) -> sp.csr_matrix:
        """Restriction matrix (n_interior_edges x n_edges) realizing psi x n = 0."""
        idx = self.interior_edges
        return sp.csr_matrix((np.ones(idx.size), (np.arange(idx.size), idx)),
                             shape=(idx.size, self.n_edges))

    @cached_property
    def edge_directions(self) -> np.ndarray:
        """Axis (0, 1, 2) each edge is parallel to."""
        return np.repeat(np.arange(3), np.diff(self.edge_offsets))

    @cached_property
    def face_normals(self) -> np.ndarray:
        return np.repeat(np.arange(3), np.diff(self.face_offsets))

    # geometry -----------------------------------------------------------------
    def _lattice(self, shape, shift):
        h = self.spacing
        axes = [(np.arange(s) + o) * hh for s, o, hh in zip(shape, shift, h)]
        X, Y, Z = np.meshgrid(*axes, indexing="ij")
        # flatten in x-fastest order
        return np.stack([X.ravel(order="F"), Y.ravel(order="F"), Z.ravel(order="F")], axis=1)

    @cached_property
    def node_coords(self) -> np.ndarray:
        return self._lattice(self.node_shape, (0, 0, 0))

    @cached_property
    def cell_centers(self) -> np.ndarray:
        return self._lattice(self.spec.cells, (0.5, 0.5, 0.5))

    @cached_property
    def edge_midpoints(self) -> np.ndarray:
        blocks = []
        for axis, shape in enumerate(self.edge_shapes()):
            shift = [0.0, 0.0, 0.0]
            shift[axis] = 0.5
            blocks.append(self._lattice(shape, shift))
        return np.concatenate(blocks)

    @cached_property
    def face_centers(self) -> np.ndarray:
        blocks = []
        for axis, shape in enumerate(self.face_shapes()):
            shift = [0.5, 0.5, 0.5]
            shift[axis] = 0.0
            blocks.append(self._lattice(shape, shift))
        return np.concatenate(blocks)

    @cached_property
    def cell_edges(self) -> np.ndarray:
        """(n_cells, 12) global edge indices: 4 x-edges, 4 y-edges, 4 z-edges.

        Within each direction the local order is (a, b) in ((0,0), (1,0), (0,1), (1,1))
        where a, b are the offsets along the two transverse axes in increasing axis order.
        """
        nx, ny, nz = self.spec.cells
        i, j, k = _cell_index_grid(self.spec.cells)
        cols = []
        for axis, shape in enumerate(self.edge_shapes()):
            t1, t2 = [a for a in range(3) if a != axis]
            for b in (0, 1):
                for a in (0, 1):
                    ijk = [i, j, k]
                    ijk[t1] = ijk[t1] + a
                    ijk[t2] = ijk[t2] + b
                    cols.append(self.edge_offsets[axis] + _flat(ijk, shape))
        return np.stack(cols, axis=1)

    @cached_property
    def cell_faces(self) -> np.ndarray:
        """(n_cells, 6) global face indices: x-low, x-high, y-low, y-high, z-low, z-high."""
        i, j, k = _cell_index_grid(self.spec.cells)
        cols = []
        for axis, shape in enumerate(self.face_shapes()):
            for a in (0, 1):
                ijk = [i, j, k]
                ijk[axis] = ijk[axis] + a
                cols.append(self.face_offsets[axis] + _flat(ijk, shape))
        return np.stack(cols, axis=1)

    @cached_property
    def cell_nodes(self) -> np.ndarray:
        """(n_cells, 8) node indices, local order x fastest."""
        i, j, k = _cell_index_grid(self.spec.cells)
        cols = []
        for c in (0, 1):
            for b in (0, 1):
                for a in (0, 1):
                    cols.append(_flat([i + a, j + b, k + c], self.node_shape))
        return np.stack(cols, axis=1)

    def summary(self) -> str:
        h = self.spacing
        return "\n".join([
            f"cells per axis : {self.spec.cells[0]} x {self.spec.cells[1]} x {self.spec.cells[2]}",
            f"extents        : {self.spec.extents[0]:g} x {self.spec.extents[1]:g} x {self.spec.extents[2]:g}",
            f"spacing        : {h[0]:.6g} {h[1]:.6g} {h[2]:.6g}",
            f"nodes          : {self.n_nodes} ({len(self.boundary_nodes)} boundary)",
            f"edges          : {self.n_edges} ({len(self.boundary_edges)} boundary)",
            f"faces          : {self.n_faces} ({len(self.boundary_faces)} boundary)",
            f"cells          : {self.n_cells}",
        ])


def _cell_index_grid(cells):
    nx, ny, nz = cells
    c = np.arange(nx * ny * nz)
    return c % nx, (c // nx) % ny, c // (nx * ny)


def _flat(ijk, shape):
    i, j, k = ijk
    return i + shape[0] * (j + shape[1] * k)


def _on_box_surface(shape, tangential_axes, cells):
    """Mask of entities of a block whose index along any of ``tangential_axes``
    sits on the box surface (index 0 or cells[axis])."""
    idx = np.indices(shape)
    mask = np.zeros(shape, dtype=bool)
    for a in tangential_axes:
        mask |= (idx[a] == 0) | (idx[a] == cells[a])
    return mask.ravel(order="F")


def build_complex(spec: GridSpec) -> Complex:
    """Assemble the incidence operators and boundary index sets for ``spec``."""
    nx, ny, nz = spec.cells
    n_edges = 3 * max(nx, ny, nz) * (max(nx, ny, nz) + 1) ** 2
    if (nx + 1) * (ny + 1) * (nz + 1) > _MAX_INDEX or n_edges > _MAX_INDEX:
        raise GridSizeError(f"grid {spec.cells} exceeds the 32-bit index space")

    Dx, Dy, Dz = _diff(nx), _diff(ny), _diff(nz)
    Ix, Iy, Iz = _eye(nx), _eye(ny), _eye(nz)
    Ix1, Iy1, Iz1 = _eye(nx + 1), _eye(ny + 1), _eye(nz + 1)

    G = sp.vstack([
        _kron3(Iz1, Iy1, Dx),
        _kron3(Iz1, Dy, Ix1),
        _kron3(Dz, Iy1, Ix1),
    ], format="csr")

    # x-faces: dy Ez - dz Ey ; y-faces: dz Ex - dx Ez ; z-faces: dx Ey - dy Ex
    n_ex = nx * (ny + 1) * (nz + 1)
    n_ey = (nx + 1) * ny * (nz + 1)
    n_ez = (nx + 1) * (ny + 1) * nz
    Z = sp.csr_matrix
    Cx = sp.hstack([Z(((nx + 1) * ny * nz, n_ex), dtype=np.int64),
                    -_kron3(Dz, Iy, Ix1),
                    _kron3(Iz, Dy, Ix1)], format="csr")
    Cy = sp.hstack([_kron3(Dz, Iy1, Ix),
                    Z((nx * (ny + 1) * nz, n_ey), dtype=np.int64),
                    -_kron3(Iz, Iy1, Dx)], format="csr")
    Cz = sp.hstack([-_kron3(Iz1, Dy, Ix),
                    _kron3(Iz1, Iy, Dx),
                    Z((nx * ny * (nz + 1), n_ez), dtype=np.int64)], format="csr")
    C = sp.vstack([Cx, Cy, Cz], format="csr")

    D = sp.hstack([
        _kron3(Iz, Iy, Dx),
        _kron3(Iz, Dy, Ix),
        _kron3(Dz, Iy, Ix),
    ], format="csr")

    edge_shapes = [(nx, ny + 1, nz + 1), (nx + 1, ny, nz + 1), (nx + 1, ny + 1, nz)]
    face_shapes = [(nx + 1, ny, nz), (nx, ny + 1, nz), (nx, ny, nz + 1)]
    cells = spec.cells

    node_mask = _on_box_surface((nx + 1, ny + 1, nz + 1), (0, 1, 2), cells)
    edge_mask = np.concatenate([
        _on_box_surface(shape, [a for a in range(3) if a != axis], cells)
        for axis, shape in enumerate(edge_shapes)
    ])
    face_mask = np.concatenate([
        _on_box_surface(shape, [axis], cells) for axis, shape in enumerate(face_shapes)
    ])

    for M in (G, C, D):
        M.sort_indices()
    return Complex(
        spec=spec, G=G, C=C, D=D,
        boundary_nodes=np.flatnonzero(node_mask),
        boundary_edges=np.flatnonzero(edge_mask),
        boundary_faces=np.flatnonzero(face_mask),
        _shapes={"edges": edge_shapes, "faces": face_shapes},
    )


def restrict_interior(complex: Complex, field: np.ndarray) -> np.ndarray:
    """Zero the boundary-edge entries of an edge cochain (tangential trace -> 0)."""
    field = np.asarray(field)
    if field.shape[0] != complex.n_edges:
        raise ValueError(f"edge field has length {field.shape[0]}, expected {complex.n_edges}")
    out = field.copy()
    out[complex.boundary_edges] = 0
    return out

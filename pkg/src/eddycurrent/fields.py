"""Interpolation of analytic fields into cochains and reconstruction back to points."""
from __future__ import annotations

import numpy as np

from .assembly import edge_basis, face_basis, gauss_points
from .grid import Complex


def nodal_volumes(complex: Complex) -> np.ndarray:
    """Lumped nodal volumes ``int phi_i`` of the trilinear hat functions."""
    w = np.bincount(complex.cell_nodes.ravel(), minlength=complex.n_nodes).astype(float)
    return w * complex.spec.cell_volume / 8.0


def interpolate_edges(complex: Complex, func, t: float | None = None, order: int = 3) -> np.ndarray:
    """Edge circulations of ``func(points[, t]) -> (n, 3)`` by Gauss quadrature along each edge."""
    x, w = np.polynomial.legendre.leggauss(order)
    s = 0.5 * (x + 1.0)
    w = 0.5 * w
    h = complex.spacing
    d = complex.edge_directions
    start = complex.edge_midpoints.copy()
    start[np.arange(len(d)), d] -= 0.5 * h[d]
    out = np.zeros(complex.n_edges)
    for sk, wk in zip(s, w):
        pts = start.copy()
        pts[np.arange(len(d)), d] += sk * h[d]
        vals = func(pts) if t is None else func(pts, t)
        out += wk * vals[np.arange(len(d)), d]
    return out * h[d]


def interpolate_faces(complex: Complex, func, t: float | None = None, order: int = 3) -> np.ndarray:
    """Face fluxes of ``func`` by tensor Gauss quadrature over each face."""
    x, w = np.polynomial.legendre.leggauss(order)
    s = 0.5 * (x + 1.0)
    w = 0.5 * w
    h = complex.spacing
    nrm = complex.face_normals
    corner = complex.face_centers.copy()
    out = np.zeros(complex.n_faces)
    idx = np.arange(len(nrm))
    for axis in range(3):
        sel = nrm == axis
        t1, t2 = [a for a in range(3) if a != axis]
        base = corner[sel]
        base[:, t1] -= 0.5 * h[t1]
        base[:, t2] -= 0.5 * h[t2]
        acc = np.zeros(sel.sum())
        for sa, wa in zip(s, w):
            for sb, wb in zip(s, w):
                pts = base.copy()
                pts[:, t1] += sa * h[t1]
                pts[:, t2] += sb * h[t2]
                vals = func(pts) if t is None else func(pts, t)
                acc += wa * wb * vals[:, axis]
        out[idx[sel]] = acc * h[t1] * h[t2]
    return out


def interpolate_nodes(complex: Complex, func) -> np.ndarray:
    return np.asarray(func(complex.node_coords), dtype=float)


def edge_to_nodes(complex: Complex, e: np.ndarray) -> np.ndarray:
    """Nodal vector field: each component is the mean of the adjacent edge values
    (circulation / length) in that direction."""
    nn = complex.n_nodes
    out = np.zeros((nn, 3))
    h = complex.spacing
    G = complex.G.tocoo()
    d = complex.edge_directions
    vals = e[G.row] / h[d[G.row]]
    for axis in range(3):
        sel = d[G.row] == axis
        s = np.bincount(G.col[sel], weights=vals[sel], minlength=nn)
        cnt = np.bincount(G.col[sel], minlength=nn)
        out[:, axis] = s / np.maximum(cnt, 1)
    return out


def edge_to_cells(complex: Complex, e: np.ndarray) -> np.ndarray:
    """Cell-center values of the Whitney field (exact evaluation at the center)."""
    B = edge_basis(np.array([[0.5, 0.5, 0.5]]), complex.spacing)[0]
    return e[complex.cell_edges] @ B


def face_to_cells(complex: Complex, f: np.ndarray) -> np.ndarray:
    B = face_basis(np.array([[0.5, 0.5, 0.5]]), complex.spacing)[0]
    return f[complex.cell_faces] @ B


def _cell_points(complex: Complex, ref: np.ndarray) -> np.ndarray:
    lower = complex.cell_centers - 0.5 * complex.spacing
    return lower[:, None, :] + ref[None, :, :] * complex.spacing


def l2_error_edges(complex: Complex, e: np.ndarray, func, t=None, order: int = 3) -> float:
    """L^2 distance between the Whitney field of ``e`` and an analytic field."""
    pts, w = gauss_points(order)
    B = edge_basis(pts, complex.spacing)
    vals = np.einsum("cp,gpa->cga", e[complex.cell_edges], B)
    X = _cell_points(complex, pts).reshape(-1, 3)
    exact = (func(X) if t is None else func(X, t)).reshape(vals.shape)
    err = np.einsum("g,cga->", w, (vals - exact) ** 2) * complex.spec.cell_volume
    return float(np.sqrt(err))


def l2_error_faces(complex: Complex, f: np.ndarray, func, t=None, order: int = 3) -> float:
    pts, w = gauss_points(order)
    B = face_basis(pts, complex.spacing)
    vals = np.einsum("cp,gpa->cga", f[complex.cell_faces], B)
    X = _cell_points(complex, pts).reshape(-1, 3)
    exact = (func(X) if t is None else func(X, t)).reshape(vals.shape)
    err = np.einsum("g,cga->", w, (vals - exact) ** 2) * complex.spec.cell_volume
    return float(np.sqrt(err))


def l2_norm_analytic(complex: Complex, func, t=None, order: int = 3) -> float:
    pts, w = gauss_points(order)
    X = _cell_points(complex, pts).reshape(-1, 3)
    vals = (func(X) if t is None else func(X, t)).reshape(complex.n_cells, len(w), 3)
    return float(np.sqrt(np.einsum("g,cga->", w, vals ** 2) * complex.spec.cell_volume))


def nodal_gradient_norm(complex: Complex, e: np.ndarray) -> float:
    """L^2 norm of the full gradient of the edge-to-node reconstruction,
    using second-order finite differences (one-sided at the boundary)."""
    v = edge_to_nodes(complex, e)
    shape = complex.node_shape
    h = complex.spacing
    w = nodal_volumes(complex)
    total = 0.0
    for comp in range(3):
        arr = v[:, comp].reshape(shape, order="F")
        for axis in range(3):
            if shape[axis] < 2:
                continue
            g = np.gradient(arr, h[axis], axis=axis, edge_order=1 if shape[axis] < 3 else 2)
            total += float(np.sum(w * g.ravel(order="F") ** 2))
    return float(np.sqrt(total))

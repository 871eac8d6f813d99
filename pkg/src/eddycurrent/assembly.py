"""Weighted mass / stiffness operators for lowest-order edge and face elements,
and the symmetric positive definite solvers used by every other module.

Edge unknowns are circulations of the Whitney (first-kind Nedelec) hexahedral
edge basis; face unknowns are fluxes of the lowest-order Raviart-Thomas basis.
The curl of an edge field is therefore exactly the face field with fluxes
``C @ e``. Cell coefficients are piecewise constant, so 2-point Gauss
quadrature per axis integrates every mass matrix exactly.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConvergenceError, GridMismatchError
from .grid import Complex
from .materials import MaterialModel

LINEAR_TOL = 1e-10
SYMMETRY_TOL = 1e-12


# reference element -----------------------------------------------------------

def gauss_points(order: int = 2):
    """Tensor Gauss-Legendre points on [0,1]^3 and weights summing to 1."""
    x, w = np.polynomial.legendre.leggauss(order)
    x, w = 0.5 * (x + 1.0), 0.5 * w
    X, Y, Z = np.meshgrid(x, x, x, indexing="ij")
    W = w[:, None, None] * w[None, :, None] * w[None, None, :]
    return np.stack([X.ravel(), Y.ravel(), Z.ravel()], 1), W.ravel()


def _hat(s, t):
    return (1.0 - t) if s == 0 else t


def edge_basis(points: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Values (n_points, 12, 3) of the local edge basis at reference points.

    Local ordering matches :attr:`Complex.cell_edges`.
    """
    out = np.zeros((len(points), 12, 3))
    p = 0
    for axis in range(3):
        t1, t2 = [a for a in range(3) if a != axis]
        for b in (0, 1):
            for a in (0, 1):
                out[:, p, axis] = _hat(a, points[:, t1]) * _hat(b, points[:, t2]) / h[axis]
                p += 1
    return out


def face_basis(points: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Values (n_points, 6, 3) of the local face basis (order of :attr:`Complex.cell_faces`)."""
    out = np.zeros((len(points), 6, 3))
    q = 0
    for axis in range(3):
        t1, t2 = [a for a in range(3) if a != axis]
        for s in (0, 1):
            out[:, q, axis] = _hat(s, points[:, axis]) / (h[t1] * h[t2])
            q += 1
    return out


def _tensor_mass(basis_a, basis_b, weights, volume):
    """Reference integrals L[a, b, p, q] = vol * sum_g w_g Ba[g,p,a] Bb[g,q,b]."""
    return volume * np.einsum("g,gpa,gqb->abpq", weights, basis_a, basis_b)


def _assemble(local: np.ndarray, rows: np.ndarray, cols: np.ndarray, shape) -> sp.csr_matrix:
    n_loc_r, n_loc_c = local.shape[1:]
    R = np.repeat(rows[:, :, None], n_loc_c, axis=2)
    Cc = np.repeat(cols[:, None, :], n_loc_r, axis=1)
    M = sp.coo_matrix((local.ravel(), (R.ravel(), Cc.ravel())), shape=shape).tocsr()
    M.sum_duplicates()
    M.sort_indices()
    return M


def _coefficient_tensor(coef, n_cells) -> np.ndarray:
    coef = np.asarray(coef, dtype=float)
    if coef.ndim == 1:
        return coef[:, None, None] * np.eye(3)
    if coef.ndim == 0:
        return np.broadcast_to(coef * np.eye(3), (n_cells, 3, 3))
    return coef


def edge_mass(complex: Complex, coef) -> sp.csr_matrix:
    """Edge Gram matrix of ``int coef u . v`` with cell-wise scalar or 3x3 ``coef``."""
    pts, w = gauss_points(2)
    B = edge_basis(pts, complex.spacing)
    L = _tensor_mass(B, B, w, complex.spec.cell_volume)
    K = _coefficient_tensor(coef, complex.n_cells)
    local = np.einsum("cab,abpq->cpq", K, L)
    ce = complex.cell_edges
    return _assemble(local, ce, ce, (complex.n_edges, complex.n_edges))


def face_mass(complex: Complex, coef) -> sp.csr_matrix:
    pts, w = gauss_points(2)
    B = face_basis(pts, complex.spacing)
    L = _tensor_mass(B, B, w, complex.spec.cell_volume)
    K = _coefficient_tensor(coef, complex.n_cells)
    local = np.einsum("cab,abpq->cpq", K, L)
    cf = complex.cell_faces
    return _assemble(local, cf, cf, (complex.n_faces, complex.n_faces))


def edge_face_mass(complex: Complex) -> sp.csr_matrix:
    """Mixed Gram matrix ``int w_e . v_f`` (edges x faces), unit weight."""
    pts, w = gauss_points(2)
    Be = edge_basis(pts, complex.spacing)
    Bf = face_basis(pts, complex.spacing)
    L = np.einsum("g,gpa,gqa->pq", w, Be, Bf) * complex.spec.cell_volume
    local = np.broadcast_to(L, (complex.n_cells,) + L.shape)
    return _assemble(local, complex.cell_edges, complex.cell_faces,
                     (complex.n_edges, complex.n_faces))


# weighted forms ----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class WeightedForms:
    """All Gram / stiffness operators for one (complex, material) pair.

    Attributes
    ----------
    M_mu_edge : mu-weighted edge mass, the X_mu inner product.
    M_edge : unweighted edge mass (L^2 inner product of edge fields).
    M_sigma_edge : sigma-weighted edge mass.
    M_face : unweighted face mass; the curl pairing with the E-space is ``M_face @ C``.
    M_mu_face : mu-weighted face mass.
    M_sigma_face : sigma Gram of the electric field space (dual edges = primal faces).
    M_invsigma_face : sigma^-1 weighted face mass; adjacent cells contribute the
        arithmetic mean of sigma^-1, i.e. a harmonic mean of sigma.
    K_mix : edge x edge pairing ``int curl(w_j) . w_i``.
    K_curlcurl_mu : ``C^T M_mu_face C``.
    B_div : ``G_0^T M_mu_edge`` with G_0 restricted to interior nodes.
    """

    complex: Complex
    model: MaterialModel
    M_mu_edge: sp.csr_matrix
    M_edge: sp.csr_matrix
    M_sigma_edge: sp.csr_matrix
    M_face: sp.csr_matrix
    M_mu_face: sp.csr_matrix
    M_sigma_face: sp.csr_matrix
    M_invsigma_face: sp.csr_matrix
    K_mix: sp.csr_matrix
    K_curlcurl_mu: sp.csr_matrix
    B_div: sp.csr_matrix

    @property
    def C(self) -> sp.csr_matrix:
        return self._Cf

    @cached_property
    def _Cf(self):
        return self.complex.C.astype(float)

    @cached_property
    def G(self) -> sp.csr_matrix:
        return self.complex.G.astype(float)

    @cached_property
    def G0(self) -> sp.csr_matrix:
        """Gradient of interior-node (H^1_0) potentials."""
        return self.G[:, self.complex.interior_nodes].tocsr()

    @cached_property
    def R(self) -> sp.csr_matrix:
        return self.complex.interior_edge_selector

    def interior(self, A: sp.spmatrix) -> sp.csr_matrix:
        """Restrict an edge x edge operator to interior edges."""
        return (self.R @ A @ self.R.T).tocsr()

    def curl_pairing(self) -> sp.csr_matrix:
        """(faces x edges) matrix with entries ``(curl w_j, v_i)_{L^2}``."""
        return (self.M_face @ self.C).tocsr()

    def norm_mu(self, f) -> float:
        return float(np.sqrt(max(f @ (self.M_mu_edge @ f), 0.0)))

    def norm_l2(self, f) -> float:
        return float(np.sqrt(max(f @ (self.M_edge @ f), 0.0)))

    def norm_face(self, g) -> float:
        return float(np.sqrt(max(g @ (self.M_face @ g), 0.0)))

    def curl_norm(self, f) -> float:
        """Unweighted L^2 norm of the curl of an edge field."""
        return self.norm_face(self.C @ f)


def assemble_forms(complex: Complex, model: MaterialModel) -> WeightedForms:
    if model.grid != complex.spec:
        raise GridMismatchError(f"material grid {model.grid} does not match complex grid {complex.spec}")
    mu = model.mu
    M_mu_edge = edge_mass(complex, mu)
    M_face = face_mass(complex, np.ones(complex.n_cells))
    M_mu_face = face_mass(complex, mu)
    C = complex.C.astype(float)
    M_ef = edge_face_mass(complex)
    G0 = complex.G.astype(float)[:, complex.interior_nodes]
    return WeightedForms(
        complex=complex,
        model=model,
        M_mu_edge=M_mu_edge,
        M_edge=edge_mass(complex, np.ones(complex.n_cells)),
        M_sigma_edge=edge_mass(complex, model.sigma),
        M_face=M_face,
        M_mu_face=M_mu_face,
        M_sigma_face=face_mass(complex, model.sigma),
        M_invsigma_face=face_mass(complex, model.sigma_inverse),
        K_mix=(M_ef @ C).tocsr(),
        K_curlcurl_mu=(C.T @ M_mu_face @ C).tocsr(),
        B_div=(G0.T @ M_mu_edge).tocsr(),
    )


def is_symmetric(A, tol: float = SYMMETRY_TOL) -> bool:
    A = sp.csr_matrix(A)
    scale = abs(A).max() if A.nnz else 0.0
    if scale == 0:
        return True
    return abs(A - A.T).max() <= tol * scale


# solvers -------------------------------------------------------------------------

class SparseOperator:
    """Sparse matrix with a checked symmetry flag."""

    def __init__(self, matrix, symmetric: bool | None = None):
        self.matrix = sp.csr_matrix(matrix)
        if symmetric is None:
            symmetric = is_symmetric(self.matrix)
        elif symmetric and not is_symmetric(self.matrix):
            raise ValueError("operator flagged symmetric but max|K - K^T| exceeds tolerance")
        self.symmetric = symmetric

    @property
    def shape(self):
        return self.matrix.shape

    def __matmul__(self, x):
        return self.matrix @ x

    def diagonal(self):
        return self.matrix.diagonal()


def factorize(A):
    """Sparse LU factorization returning a solve callable (used for repeated solves)."""
    lu = spla.splu(sp.csc_matrix(A), permc_spec="MMD_AT_PLUS_A", options={"SymmetricMode": True})
    return lu.solve


class DivergenceFreeProjector:
    """mu-orthogonal projector of interior edge fields onto the discrete X_mu.

    ``P v = v - G_0 q`` where ``(G_0^T M G_0) q = G_0^T M v``; each application
    solves one nodal mu-weighted Poisson problem. ``project_residual`` applies
    ``P^T``, which removes the part of a residual lying in ``range(M G_0)``.
    """

    def __init__(self, forms: WeightedForms):
        R = forms.R
        interior_nodes = forms.complex.interior_nodes
        self.G = (R @ forms.G[:, interior_nodes]).tocsr()
        self.M = forms.interior(forms.M_mu_edge)
        if self.G.shape[1]:
            self._solve = factorize((self.G.T @ self.M @ self.G).tocsc())
        else:
            self._solve = None

    def potential(self, v):
        if self._solve is None:
            return np.zeros(0)
        return self._solve(self.G.T @ (self.M @ v))

    def project(self, v):
        if self._solve is None:
            return np.array(v, dtype=float)
        return v - self.G @ self.potential(v)

    __call__ = project

    def project_residual(self, r):
        if self._solve is None:
            return np.array(r, dtype=float)
        return r - self.M @ (self.G @ self._solve(self.G.T @ r))


class MeanFreeProjector:
    """Euclidean projector removing the constant component (symmetric, ``P == P^T``)."""

    def project(self, v):
        return v - v.mean()

    __call__ = project
    project_residual = project


def solve_spd(op, rhs, tol: float = LINEAR_TOL, constraint=None, x0=None,
              maxiter: int | None = None, preconditioner: str = "jacobi"):
    """Preconditioned (projected) conjugate gradients.

    With ``constraint`` (an object with ``project`` and ``project_residual``),
    iterates stay in the constraint kernel and convergence is measured on the
    projected residual. Raises :class:`ConvergenceError` on breakdown or when
    ``maxiter`` is exceeded.
    """
    A = op.matrix if isinstance(op, SparseOperator) else op
    b = np.asarray(rhs, dtype=float)
    n = b.shape[0]
    if maxiter is None:
        maxiter = max(10 * n, 100)
    if preconditioner == "jacobi" and hasattr(A, "diagonal"):
        d = np.asarray(A.diagonal(), dtype=float)
        dinv = np.where(d > 0, 1.0 / np.where(d > 0, d, 1.0), 1.0)
    else:
        dinv = np.ones(n)

    if constraint is None:
        P = PT = lambda v: v
    else:
        P, PT = constraint.project, constraint.project_residual

    def precond(r):
        return P(dinv * PT(r))

    x = np.zeros(n) if x0 is None else P(np.asarray(x0, dtype=float))
    r = b - A @ x
    bnorm = np.linalg.norm(PT(b))
    history = []
    if bnorm == 0.0:
        return np.zeros(n)
    z = precond(r)
    p = z.copy()
    rz = r @ z
    for _ in range(maxiter):
        rel = np.linalg.norm(PT(r)) / bnorm
        history.append(rel)
        if rel <= tol:
            return x
        q = A @ p
        pq = p @ q
        if pq <= 0 or not np.isfinite(pq):
            raise ConvergenceError("conjugate gradient breakdown (operator not SPD on subspace)", history)
        alpha = rz / pq
        x = x + alpha * p
        r = r - alpha * q
        z = precond(r)
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    rel = np.linalg.norm(PT(r)) / bnorm
    history.append(rel)
    if rel <= tol:
        return x
    raise ConvergenceError(f"conjugate gradients did not reach {tol:g} in {maxiter} iterations "
                           f"(residual {rel:.3e})", history)

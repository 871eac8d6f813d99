"""Helmholtz-type splittings of edge fields and the Gaffney ratio.

Two decompositions ``F = grad(potential) + remainder``:

* Neumann (unweighted): the potential has zero mean and the remainder is
  L^2-orthogonal to every discrete gradient.
* Dirichlet (mu-weighted): the potential vanishes on boundary nodes and the
  remainder lies in the discrete X_mu, i.e. it is mu-orthogonal to gradients
  of interior-node potentials.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assembly import LINEAR_TOL, MeanFreeProjector, WeightedForms, assemble_forms, solve_spd
from .fields import nodal_gradient_norm, nodal_volumes
from .grid import Complex
from .materials import MaterialModel


@dataclass(frozen=True)
class NeumannSplit:
    u: np.ndarray
    eta: np.ndarray
    norm_F: float
    norm_grad_u: float
    norm_eta: float


@dataclass(frozen=True)
class DirichletSplit:
    q: np.ndarray
    zeta: np.ndarray
    norm_F: float
    norm_grad_q: float
    norm_zeta: float
    weighted: bool


def _check_finite(F):
    F = np.asarray(F, dtype=float)
    if not np.all(np.isfinite(F)):
        raise ValueError("field contains non-finite entries")
    return F


def neumann_decompose(forms: WeightedForms, F, tol: float = LINEAR_TOL) -> NeumannSplit:
    """``F = G u + eta`` with ``int u = 0`` and ``eta`` orthogonal to all gradients."""
    F = _check_finite(F)
    G, M = forms.G, forms.M_edge
    L = (G.T @ M @ G).tocsr()
    rhs = G.T @ (M @ F)
    u = solve_spd(L, rhs, tol=tol, constraint=MeanFreeProjector())
    w = nodal_volumes(forms.complex)
    u = u - (w @ u) / w.sum()
    eta = F - G @ u
    return NeumannSplit(u=u, eta=eta, norm_F=forms.norm_l2(F),
                        norm_grad_u=forms.norm_l2(G @ u), norm_eta=forms.norm_l2(eta))


def weighted_dirichlet_decompose(forms: WeightedForms, F, tol: float = LINEAR_TOL,
                                 weighted: bool = True) -> DirichletSplit:
    """``F = G q + zeta`` with ``q = 0`` on boundary nodes.

    With ``weighted=False`` the unit weight replaces mu (the variant solving
    ``Laplace q = div F``).
    """
    F = _check_finite(F)
    M = forms.M_mu_edge if weighted else forms.M_edge
    G0 = forms.G0
    L = (G0.T @ M @ G0).tocsr()
    q = np.zeros(forms.complex.n_nodes)
    if L.shape[0]:
        q[forms.complex.interior_nodes] = solve_spd(L, G0.T @ (M @ F), tol=tol)
    zeta = F - forms.G @ q
    return DirichletSplit(q=q, zeta=zeta, norm_F=forms.norm_l2(F),
                          norm_grad_q=forms.norm_l2(forms.G @ q), norm_zeta=forms.norm_l2(zeta),
                          weighted=weighted)


def divergence_residual(forms: WeightedForms, field) -> float:
    """max |B_div field| relative to the largest contributing term."""
    r = forms.B_div @ field
    scale = np.abs(forms.B_div).max() * np.abs(field).max() if field.size else 0.0
    return float(np.abs(r).max() / scale) if scale > 0 and r.size else 0.0


def gaffney_ratio(complex: Complex, psi, forms: WeightedForms | None = None) -> float:
    """(||div psi||^2 + ||curl psi||^2 + ||psi||^2) / ||grad psi||^2.

    ``psi`` must have zero tangential trace. The divergence is the weak
    divergence against interior hat functions with lumped nodal volumes; the
    full gradient is taken from the edge-to-node reconstruction.
    """
    psi = np.asarray(psi, dtype=float)
    if forms is None:
        forms = assemble_forms(complex, MaterialModel.uniform(complex.spec))
    if np.any(psi[complex.boundary_edges] != 0):
        raise ValueError("psi must vanish on boundary edges")
    w = nodal_volumes(complex)[complex.interior_nodes]
    wdiv = forms.G0.T @ (forms.M_edge @ psi)
    div2 = float(np.sum(wdiv ** 2 / w))
    curl2 = forms.curl_norm(psi) ** 2
    mass2 = forms.norm_l2(psi) ** 2
    grad2 = nodal_gradient_norm(complex, psi) ** 2
    if grad2 == 0.0:
        raise ValueError("Gaffney ratio undefined for a field with zero gradient")
    return (div2 + curl2 + mass2) / grad2

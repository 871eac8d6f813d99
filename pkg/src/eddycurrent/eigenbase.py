"""Magnetic eigenbasis: mu-weighted curl-curl eigenpairs on the discrete X_mu
with vanishing tangential trace, and the harmonic space.

The eigenpairs are computed through the resolvent ``R = (K + M)^{-1} M``:
block inverse iteration finds its dominant eigenvalues ``tau``, and the
curl-curl eigenvalues follow from ``lambda = 1/tau - 1``.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .assembly import DivergenceFreeProjector, WeightedForms, factorize
from .errors import ConvergenceError

logger = logging.getLogger(__name__)

CLUSTER_TOL = 1e-6
_PROBE_SEED = 20240917


@dataclass(frozen=True, eq=False)
class EigenBasis:
    """Eigenfields ``psis`` (n_edges, m), zero on boundary edges, and ascending ``lambdas``."""

    forms: WeightedForms
    psis: np.ndarray
    lambdas: np.ndarray
    taus: np.ndarray
    iterations: int = 0
    residuals: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def m(self) -> int:
        return self.psis.shape[1]

    def gram(self) -> np.ndarray:
        """Gram matrix in the X_mu inner product."""
        return self.psis.T @ (self.forms.M_mu_edge @ self.psis)

    def curl_gram(self) -> np.ndarray:
        """``(curl psi_i, curl psi_j)_{X_mu}``."""
        return self.psis.T @ (self.forms.K_curlcurl_mu @ self.psis)

    def truncate(self, m: int) -> "EigenBasis":
        return EigenBasis(self.forms, self.psis[:, :m], self.lambdas[:m], self.taus[:m],
                          self.iterations, self.residuals[:m])


@dataclass(frozen=True)
class HarmonicSpace:
    basis: np.ndarray
    dimension: int
    tol: float


def _m_orthonormalize(V, M):
    """Orthonormalize the columns of V in the M inner product (whitening, then MGS)."""
    S = V.T @ (M @ V)
    S = 0.5 * (S + S.T)
    w, U = np.linalg.eigh(S)
    keep = w > w.max() * 1e-14
    V = V @ (U[:, keep] / np.sqrt(w[keep]))
    # second pass removes the loss of orthogonality left by the first
    S = V.T @ (M @ V)
    L = np.linalg.cholesky(0.5 * (S + S.T))
    return sla.solve_triangular(L, V.T, lower=True).T


def _mgs(V, M):
    V = np.array(V, dtype=float, copy=True)
    for j in range(V.shape[1]):
        for _ in range(2):
            for i in range(j):
                V[:, j] -= (V[:, i] @ (M @ V[:, j])) * V[:, i]
        V[:, j] /= np.sqrt(V[:, j] @ (M @ V[:, j]))
    return V


def _clusters(lams, tol=CLUSTER_TOL):
    groups, start = [], 0
    for i in range(1, len(lams) + 1):
        if i == len(lams) or abs(lams[i] - lams[start]) > tol * (1.0 + abs(lams[start])):
            groups.append((start, i))
            start = i
    return groups


def _canonical_cluster(V, M):
    """Rotation-independent orthonormal basis of span(V): project fixed probe vectors
    onto the span and run modified Gram-Schmidt; each vector's largest entry is made
    positive."""
    k = V.shape[1]
    probes = np.random.default_rng(_PROBE_SEED).standard_normal((V.shape[0], k))
    W = V @ (V.T @ (M @ probes))
    W = _mgs(W, M)
    for j in range(k):
        i = np.argmax(np.abs(W[:, j]))
        if W[i, j] < 0:
            W[:, j] = -W[:, j]
    return W


def magnetic_eigenbasis(forms: WeightedForms, m: int, tol: float = 1e-9, seed: int = 0,
                        block: int | None = None, maxiter: int = 500) -> EigenBasis:
    """The ``m`` smallest eigenpairs of ``K psi = lambda M psi`` on the discrete X_mu.

    Parameters
    ----------
    forms : WeightedForms
    m : int
        Number of modes; must not exceed the dimension of the constrained space.
    tol : float
        Relative eigen-residual ``|K v - lambda M v| / ((1 + lambda) |M v|)``.
    block : int, optional
        Subspace size (defaults to ``m`` plus guard vectors).
    """
    cx = forms.complex
    K = forms.interior(forms.K_curlcurl_mu)
    M = forms.interior(forms.M_mu_edge)
    proj = DivergenceFreeProjector(forms)
    dim = len(cx.interior_edges) - len(cx.interior_nodes)
    if m < 1 or m > dim:
        raise ValueError(f"requested {m} modes but the constrained space has dimension {dim}")
    p = block or min(dim, m + max(6, m // 2))
    p = max(min(p, dim), m)

    resolvent = factorize((K + M).tocsc())
    rng = np.random.default_rng(seed)
    V = proj(rng.standard_normal((K.shape[0], p)))
    V = _m_orthonormalize(V, M)

    lams = np.zeros(p)
    res = np.full(p, np.inf)
    n_check = m
    it = 0
    for it in range(1, maxiter + 1):
        W = resolvent(M @ V)
        W = proj(W)
        Q = _m_orthonormalize(W, M)
        # Rayleigh-Ritz for the pencil (K + M, M): eigenvalues 1/tau = 1 + lambda
        A = Q.T @ ((K + M) @ Q)
        theta, Y = sla.eigh(0.5 * (A + A.T))
        V = Q @ Y
        lams = theta - 1.0
        R = K @ V - (M @ V) * lams
        res = np.linalg.norm(R, axis=0) / ((1.0 + np.abs(lams)) * np.linalg.norm(M @ V, axis=0))
        # a cluster straddling mode m must converge as a whole
        n_check = m
        for a, b in _clusters(lams):
            if a < m < b:
                n_check = min(b, V.shape[1] - 1) if V.shape[1] > m else m
        if V.shape[1] == dim or np.all(res[:n_check] <= tol):
            break
    else:
        raise ConvergenceError(f"eigen-iteration stagnated: residual {res[:m].max():.3e} after {maxiter} iterations",
                               list(res[:m]))

    V = V[:, :max(n_check, m)]
    lams = lams[:V.shape[1]]
    for a, b in _clusters(lams):
        if b - a > 1:
            V[:, a:b] = _canonical_cluster(V[:, a:b], M)
        else:
            i = np.argmax(np.abs(V[:, a]))
            if V[i, a] < 0:
                V[:, a] = -V[:, a]
    V = _mgs(V, M)[:, :m]
    lams = lams[:m]
    psis = forms.R.T @ V
    taus = 1.0 / (1.0 + lams)
    logger.info("eigenbasis: %d modes in %d iterations, lambda_1 = %.6g", m, it, lams[0])
    return EigenBasis(forms, np.asarray(psis), lams, taus, it, res[:m])


def harmonic_space(basis: EigenBasis, harmonic_tol: float | None = None) -> HarmonicSpace:
    """Eigenfields with eigenvalue below ``harmonic_tol``.

    The default tolerance is ``1e-6 * lambda_ref`` with ``lambda_ref`` the first
    eigenvalue that is clearly positive (above ``1e-8`` times the largest).
    """
    lams = basis.lambdas
    positive = lams[lams > 1e-8 * max(abs(lams).max(), 1e-300)]
    lam_ref = positive[0] if positive.size else 1.0
    if harmonic_tol is None:
        harmonic_tol = 1e-6 * lam_ref
    sel = lams <= harmonic_tol
    if sel.any() and positive.size and harmonic_tol >= positive[0]:
        warnings.warn(f"harmonic tolerance {harmonic_tol:g} exceeds the first positive eigenvalue "
                      f"{positive[0]:g}; the count is not a harmonic dimension", stacklevel=2)
    return HarmonicSpace(basis.psis[:, sel], int(sel.sum()), float(harmonic_tol))


def harmonic_dimension(basis: EigenBasis, harmonic_tol: float | None = None) -> int:
    return harmonic_space(basis, harmonic_tol).dimension


def expand(basis: EigenBasis, F) -> np.ndarray:
    """Coefficients ``(F, psi_j)_{X_mu}``."""
    return basis.psis.T @ (basis.forms.M_mu_edge @ np.asarray(F, dtype=float))


def reconstruct(basis: EigenBasis, coeffs) -> np.ndarray:
    return basis.psis @ np.asarray(coeffs, dtype=float)

"""Cell-wise permeability and conductivity with the structural bounds

    1/L <= mu <= L,   max |grad mu| <= L,   1/L |v|^2 <= sigma v . v <= L |v|^2.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import MaterialError
from .grid import GridSpec

logger = logging.getLogger(__name__)

SYMMETRY_TOL = 1e-12
PIVOT_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class MaterialModel:
    """Permeability ``mu`` (n_cells,) and conductivity ``sigma`` (n_cells, 3, 3).

    ``lambda_bound`` is the ellipticity constant claimed for the model; use
    :func:`validate` to check the claim.
    """

    grid: GridSpec
    mu: np.ndarray
    sigma: np.ndarray
    lambda_bound: float = 1.0

    def __post_init__(self):
        n = self.grid.n_cells
        mu = np.broadcast_to(np.asarray(self.mu, dtype=float), (n,)).copy()
        sigma = np.asarray(self.sigma, dtype=float)
        if sigma.shape == (3, 3):
            sigma = np.broadcast_to(sigma, (n, 3, 3))
        if sigma.shape != (n, 3, 3):
            raise MaterialError(f"sigma must have shape ({n}, 3, 3), got {sigma.shape}")
        sigma = sigma.copy()
        mu.flags.writeable = False
        sigma.flags.writeable = False
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "lambda_bound", float(self.lambda_bound))

    @classmethod
    def uniform(cls, grid: GridSpec, mu=1.0, sigma=1.0, lambda_bound=None) -> "MaterialModel":
        """Constant coefficients; scalar ``sigma`` means ``sigma * I``."""
        sigma = np.asarray(sigma, dtype=float)
        if sigma.ndim == 0:
            sigma = sigma * np.eye(3)
        model = cls(grid, mu, sigma, 1.0)
        if lambda_bound is None:
            lambda_bound = minimal_lambda(model)
        return model.with_lambda(lambda_bound)

    def with_lambda(self, lambda_bound: float) -> "MaterialModel":
        return MaterialModel(self.grid, self.mu, self.sigma, lambda_bound)

    def with_mu(self, mu) -> "MaterialModel":
        return MaterialModel(self.grid, mu, self.sigma, self.lambda_bound)

    @property
    def sigma_inverse(self) -> np.ndarray:
        return invert_sym3(self.sigma)


def _check_symmetric(sigma: np.ndarray):
    scale = max(np.abs(sigma).max(), 1.0)
    asym = np.abs(sigma - np.swapaxes(sigma, -1, -2)).max()
    if asym > SYMMETRY_TOL * scale:
        raise MaterialError(f"sigma is not symmetric (max asymmetry {asym:.3e})")


def invert_sym3(a: np.ndarray) -> np.ndarray:
    """Invert a stack of symmetric 3x3 matrices by cofactors."""
    a = np.asarray(a, dtype=float)
    _check_symmetric(a)
    c00 = a[..., 1, 1] * a[..., 2, 2] - a[..., 1, 2] ** 2
    c01 = a[..., 0, 2] * a[..., 1, 2] - a[..., 0, 1] * a[..., 2, 2]
    c02 = a[..., 0, 1] * a[..., 1, 2] - a[..., 0, 2] * a[..., 1, 1]
    c11 = a[..., 0, 0] * a[..., 2, 2] - a[..., 0, 2] ** 2
    c12 = a[..., 0, 1] * a[..., 0, 2] - a[..., 0, 0] * a[..., 1, 2]
    c22 = a[..., 0, 0] * a[..., 1, 1] - a[..., 0, 1] ** 2
    det = a[..., 0, 0] * c00 + a[..., 0, 1] * c01 + a[..., 0, 2] * c02
    scale = np.abs(a).max(axis=(-1, -2)) ** 3
    if np.any(np.abs(det) <= PIVOT_TOL * np.maximum(scale, 1e-300)):
        raise MaterialError("sigma is singular to pivot tolerance")
    inv = np.stack([
        np.stack([c00, c01, c02], -1),
        np.stack([c01, c11, c12], -1),
        np.stack([c02, c12, c22], -1),
    ], -2)
    return inv / det[..., None, None]


def _sigma_eigs(model: MaterialModel) -> np.ndarray:
    _check_symmetric(model.sigma)
    return np.linalg.eigvalsh(model.sigma)


def lipschitz_mu(model: MaterialModel) -> float:
    """Largest |mu difference| / spacing over face-adjacent cells."""
    mu = model.mu.reshape(model.grid.cells, order="F")
    h = model.grid.spacing
    est = 0.0
    for axis in range(3):
        if mu.shape[axis] > 1:
            est = max(est, float(np.abs(np.diff(mu, axis=axis)).max() / h[axis]))
    return est


def minimal_lambda(model: MaterialModel) -> float:
    """Smallest L for which the mu and sigma bounds hold (Lipschitz part excluded)."""
    eig = _sigma_eigs(model)
    mu = model.mu
    if eig.min() <= 0 or mu.min() <= 0:
        return float("inf")
    return float(max(1.0, mu.max(), 1.0 / mu.min(), eig.max(), 1.0 / eig.min()))


@dataclass(frozen=True)
class MaterialReport:
    min_mu: float
    max_mu: float
    lipschitz_mu_estimate: float
    sigma_eig_range: tuple[float, float]
    lambda_bound: float
    minimal_lambda: float
    lipschitz_ok: bool
    feasible: bool

    def summary(self) -> str:
        lo, hi = self.sigma_eig_range
        return (f"mu in [{self.min_mu:g}, {self.max_mu:g}], |grad mu| ~ {self.lipschitz_mu_estimate:g}, "
                f"sigma eigenvalues in [{lo:g}, {hi:g}], Lambda = {self.lambda_bound:g} "
                f"(minimal {self.minimal_lambda:g}) -> {'feasible' if self.feasible else 'INFEASIBLE'}")


def validate(model: MaterialModel, cells=None) -> MaterialReport:
    """Check the model against its own ``lambda_bound``.

    ``cells`` optionally restricts the sigma eigenvalue range to a subset of cells
    (e.g. one layer). A Lipschitz bound on mu exceeding Lambda only warns.
    """
    eig = _sigma_eigs(model)
    sel = slice(None) if cells is None else cells
    lam = model.lambda_bound
    lip = lipschitz_mu(model)
    mu = model.mu
    feasible = bool(
        lam >= 1.0
        and mu.min() >= 1.0 / lam and mu.max() <= lam
        and eig.min() >= 1.0 / lam and eig.max() <= lam
    )
    lip_ok = lip <= lam
    if not lip_ok:
        warnings.warn(f"discrete Lipschitz estimate of mu ({lip:g}) exceeds Lambda = {lam:g}",
                      stacklevel=2)
    return MaterialReport(
        min_mu=float(mu.min()), max_mu=float(mu.max()),
        lipschitz_mu_estimate=lip,
        sigma_eig_range=(float(eig[sel].min()), float(eig[sel].max())),
        lambda_bound=lam, minimal_lambda=minimal_lambda(model),
        lipschitz_ok=lip_ok, feasible=feasible,
    )


def _as_tensor(s) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    if s.ndim == 0:
        return s * np.eye(3)
    if s.shape == (3,):
        return np.diag(s)
    if s.shape == (6,):
        xx, yy, zz, xy, xz, yz = s
        return np.array([[xx, xy, xz], [xy, yy, yz], [xz, yz, zz]])
    if s.shape == (3, 3):
        return s
    if s.shape == (9,):
        return s.reshape(3, 3)
    raise MaterialError(f"cannot interpret conductivity of shape {s.shape}")


def _check_spd(s: np.ndarray, name: str):
    _check_symmetric(s)
    if np.linalg.eigvalsh(s).min() <= 0:
        raise MaterialError(f"{name} is not positive definite")


def layered(grid: GridSpec, layers, mu=1.0, lambda_bound=None) -> MaterialModel:
    """Stack of horizontal conductivity layers.

    ``layers`` is a sequence of ``(z_min, z_max, tensor)``; a cell takes the
    tensor of the first layer whose half-open range contains its center height.
    Cells not covered by any layer raise ``MaterialError``.
    """
    nx, ny, nz = grid.cells
    zc = (np.arange(nz) + 0.5) * grid.spacing[2]
    zcell = np.broadcast_to(zc[:, None, None], (nz, ny, nx)).ravel()
    sigma = np.full((grid.n_cells, 3, 3), np.nan)
    assigned = np.zeros(grid.n_cells, dtype=bool)
    for z0, z1, tensor in layers:
        t = _as_tensor(tensor)
        _check_spd(t, "layer conductivity")
        sel = (~assigned) & (zcell >= z0) & (zcell < z1)
        sigma[sel] = t
        assigned |= sel
    if not assigned.all():
        raise MaterialError(f"{(~assigned).sum()} cells are not covered by any conductivity layer")
    model = MaterialModel(grid, mu, sigma, 1.0)
    return model.with_lambda(minimal_lambda(model) if lambda_bound is None else lambda_bound)


def two_layer(grid: GridSpec, sigma_top, sigma_bottom, interface_z: float, mu=1.0,
              lambda_bound=None) -> MaterialModel:
    """Conductivity ``sigma_bottom`` below ``interface_z`` and ``sigma_top`` above,
    assigned by cell-center height."""
    if not 0.0 < interface_z < grid.extents[2]:
        raise MaterialError(f"interface z = {interface_z} is outside the box")
    top, bottom = _as_tensor(sigma_top), _as_tensor(sigma_bottom)
    _check_spd(top, "sigma_top")
    _check_spd(bottom, "sigma_bottom")
    return layered(grid, [(-np.inf, interface_z, bottom), (interface_z, np.inf, top)],
                   mu=mu, lambda_bound=lambda_bound)


def layer_mu(grid: GridSpec, mu_bottom: float, mu_top: float, interface_z: float) -> np.ndarray:
    """Cell-wise two-layer permeability array."""
    nx, ny, nz = grid.cells
    zc = (np.arange(nz) + 0.5) * grid.spacing[2]
    zcell = np.broadcast_to(zc[:, None, None], (nz, ny, nx)).ravel()
    return np.where(zcell < interface_z, mu_bottom, mu_top).astype(float)

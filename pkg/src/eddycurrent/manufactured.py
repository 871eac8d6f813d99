"""Manufactured solutions on the unit box with mu = 1 and sigma = s I.

Every case picks analytic fields with ``H* x n = 0`` and derives the sources
``J^E = curl H* - sigma E*`` and ``J^M = curl E* + mu dt H*``. With
``E* = sigma^-1 curl H*`` the electric source vanishes and
``J^M = (curl curl H*) / s + dt H*``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .assembly import assemble_forms
from .eigenbase import EigenBasis, expand, magnetic_eigenbasis
from .fields import interpolate_edges, l2_error_edges, l2_error_faces, l2_norm_analytic
from .galerkin import SourceSpec, Trajectory, solve
from .grid import GridSpec, build_complex
from .materials import MaterialModel

PI = np.pi


def _cavity(X):
    """(0, 0, sin(pi x) sin(pi y)); curl curl = 2 pi^2 times itself."""
    out = np.zeros_like(X)
    out[:, 2] = np.sin(PI * X[:, 0]) * np.sin(PI * X[:, 1])
    return out


def _cavity_curl(X):
    out = np.zeros_like(X)
    out[:, 0] = PI * np.sin(PI * X[:, 0]) * np.cos(PI * X[:, 1])
    out[:, 1] = -PI * np.cos(PI * X[:, 0]) * np.sin(PI * X[:, 1])
    return out


def _shear(X):
    """(sin(pi y) sin(2 pi z), 0, 0); curl curl = 5 pi^2 times itself."""
    out = np.zeros_like(X)
    out[:, 0] = np.sin(PI * X[:, 1]) * np.sin(2 * PI * X[:, 2])
    return out


def _shear_curl(X):
    out = np.zeros_like(X)
    out[:, 1] = 2 * PI * np.sin(PI * X[:, 1]) * np.cos(2 * PI * X[:, 2])
    out[:, 2] = -PI * np.cos(PI * X[:, 1]) * np.sin(2 * PI * X[:, 2])
    return out


@dataclass(frozen=True)
class ModeTerm:
    field: Callable
    curl: Callable
    kappa: float        # curl curl field = kappa * field
    beta: float         # time factor exp(-beta t)
    amplitude: float = 1.0


@dataclass(frozen=True)
class ManufacturedCase:
    """A sum of separable terms ``a exp(-beta t) F(x)`` with ``curl curl F = kappa F``.

    ``stationary`` cases hold H* fixed with E* = 0 and J^E = curl H*.
    """

    name: str
    terms: tuple
    modes: int
    s: float = 1.0
    T: float = 0.1
    stationary: bool = False

    def H(self, X, t):
        out = np.zeros_like(X)
        for term in self.terms:
            out += term.amplitude * np.exp(-term.beta * t) * term.field(X)
        return out

    def E(self, X, t):
        out = np.zeros_like(X)
        if self.stationary:
            return out
        for term in self.terms:
            out += term.amplitude * np.exp(-term.beta * t) * term.curl(X) / self.s
        return out

    def JM(self, X, t):
        out = np.zeros_like(X)
        if self.stationary:
            return out
        for term in self.terms:
            c = term.amplitude * np.exp(-term.beta * t) * (term.kappa / self.s - term.beta)
            out += c * term.field(X)
        return out


CASES = {
    "single-cavity-mode": ManufacturedCase(
        "single-cavity-mode", (ModeTerm(_cavity, _cavity_curl, 2 * PI ** 2, 1.0),), modes=3),
    "two-mode": ManufacturedCase(
        "two-mode", (ModeTerm(_cavity, _cavity_curl, 2 * PI ** 2, 1.0),
                     ModeTerm(_shear, _shear_curl, 5 * PI ** 2, 2.0, 0.5)), modes=11),
    "stationary": ManufacturedCase(
        "stationary", (ModeTerm(_cavity, _cavity_curl, 2 * PI ** 2, 0.0),), modes=3,
        stationary=True),
}


def get_case(name: str) -> ManufacturedCase:
    try:
        return CASES[name]
    except KeyError:
        raise KeyError(f"unknown manufactured case {name!r}; registered: {', '.join(CASES)}") from None


@dataclass(frozen=True)
class ManufacturedRun:
    case: ManufacturedCase
    n: int
    dt: float
    trajectory: Trajectory
    basis: EigenBasis

    @property
    def h(self) -> float:
        return 1.0 / self.n

    def errors(self, k: int | None = None) -> tuple[float, float]:
        """Relative L^2 errors of H and E at sample ``k`` (default: final time)."""
        traj = self.trajectory
        k = len(traj.times) - 1 if k is None else k
        t = traj.times[k]
        cx = traj.forms.complex
        c = self.case
        eH = l2_error_edges(cx, traj.H(k), c.H, t)
        nH = l2_norm_analytic(cx, c.H, t)
        eE = l2_error_faces(cx, traj.e[k], c.E, t)
        nE = l2_norm_analytic(cx, c.E, t)
        # the stationary case has E* = 0; report the absolute error there
        return eH / nH, (eE / nE if nE > 0 else eE)


def build_sources(case: ManufacturedCase, forms, times, basis: EigenBasis | None = None) -> SourceSpec:
    cx = forms.complex
    H0 = interpolate_edges(cx, case.H, 0.0)
    H0[cx.boundary_edges] = 0.0
    if case.stationary:
        if basis is None:
            raise ValueError("the stationary case needs the basis to balance J^E")
        # J^E = curl of the Galerkin projection keeps the discrete state at rest
        Hm = basis.psis @ expand(basis, H0)
        JE = np.tile(cx.C @ Hm, (len(times), 1)).astype(float)
        return SourceSpec(times, JE, np.zeros((len(times), cx.n_edges)), Hm)
    JM = np.zeros((len(times), cx.n_edges))
    # separable in time: interpolate each spatial profile once
    for term in case.terms:
        prof = interpolate_edges(cx, lambda X, t, f=term.field: f(X), 0.0)
        coef = term.amplitude * (term.kappa / case.s - term.beta) * np.exp(-term.beta * times)
        JM += np.outer(coef, prof)
    JM[:, cx.boundary_edges] = 0.0
    return SourceSpec(times, np.zeros((len(times), cx.n_faces)), JM, H0)


def run_case(name: str, n: int, dt: float | None = None, T: float | None = None,
             scheme: str = "implicit-midpoint", seed: int = 0, basis: EigenBasis | None = None,
             modes: int | None = None) -> ManufacturedRun:
    case = get_case(name)
    T = case.T if T is None else T
    dt = T / 40 if dt is None else dt
    nt = int(round(T / dt)) + 1
    times = np.linspace(0.0, T, nt)
    cx = build_complex(GridSpec.cube(n))
    model = MaterialModel.uniform(cx.spec, 1.0, case.s)
    if basis is None:
        forms = assemble_forms(cx, model)
        basis = magnetic_eigenbasis(forms, modes or case.modes, seed=seed)
    forms = basis.forms
    src = build_sources(case, forms, times, basis)
    traj = solve(forms, basis, src, scheme=scheme)
    return ManufacturedRun(case, n, dt, traj, basis)


def convergence_table(name: str, grids=(4, 8, 16), dt: float | None = None, seed: int = 0):
    """Rows ``{n, h, L2_error_H, L2_error_E, rate_H, rate_E}``; rates against the previous row."""
    rows = []
    for n in grids:
        run = run_case(name, n, dt=dt, seed=seed)
        eH, eE = run.errors()
        row = {"case": name, "n": n, "h": run.h, "L2_error_H": eH, "L2_error_E": eE,
               "rate_H": float("nan"), "rate_E": float("nan")}
        if rows:
            prev = rows[-1]
            r = np.log(prev["h"] / row["h"])
            row["rate_H"] = _rate(prev["L2_error_H"], eH, r)
            row["rate_E"] = _rate(prev["L2_error_E"], eE, r)
        rows.append(row)
    return rows


def _rate(coarse, fine, log_ratio, floor=1e-12):
    """Observed order; NaN once both errors are at rounding level."""
    if coarse <= floor and fine <= floor:
        return float("nan")
    return float(np.log(coarse / max(fine, 1e-300)) / log_ratio)

"""Galerkin reduction of the eddy-current system onto the magnetic eigenbasis.

The magnetic field lives in span{psi_1..psi_m}; the electric field lives on
the dual edges of the staggered grid (one unknown per primal face), so the
curl of every magnetic mode lies in the electric space. With

    A[i, j]  = (curl psi_j, phi_i)_{L^2}       (n_faces x m)
    Msigma   = (sigma phi_j, phi_i)_{L^2}
    jE_i(t)  = (J^E(t), phi_i),  jM_j(t) = (J^M(t), psi_j)

Ampere gives ``Msigma e = A h - jE`` and Faraday ``dh/dt = -A^T e + jM``, i.e.

    dh/dt = -A^T Msigma^-1 A h + A^T Msigma^-1 jE + jM.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg as sla

from .assembly import WeightedForms, factorize
from .eigenbase import EigenBasis, expand
from .errors import CompatibilityError, MaterialError
from .helmholtz import divergence_residual, weighted_dirichlet_decompose

logger = logging.getLogger(__name__)

SCHEMES = ("implicit-midpoint", "implicit-euler")
DIV_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class SourceSpec:
    """Time-sampled data on a uniform grid ``times``.

    JE : (nt, n_faces) electric source on the electric (dual-edge) space.
    JM : (nt, n_edges) magnetic source as edge circulations.
    H0 : (n_edges,) initial magnetic field.
    G  : (nt, n_edges) optional boundary lifting; ``H x n = G x n`` on the boundary.
    """

    times: np.ndarray
    JE: np.ndarray
    JM: np.ndarray
    H0: np.ndarray
    G: np.ndarray | None = None

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.ndim != 1 or t.size < 2:
            raise ValueError("need at least two time samples")
        dt = np.diff(t)
        if np.any(dt <= 0) or not np.allclose(dt, dt[0], rtol=1e-9, atol=0):
            raise ValueError("time samples must be uniform and increasing")
        object.__setattr__(self, "times", t)
        for name in ("JE", "JM", "G"):
            v = getattr(self, name)
            if v is not None:
                v = np.asarray(v, dtype=float)
                if v.shape[0] != t.size:
                    raise ValueError(f"{name} has {v.shape[0]} samples, expected {t.size}")
                object.__setattr__(self, name, v)
        object.__setattr__(self, "H0", np.asarray(self.H0, dtype=float))

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    @property
    def T(self) -> float:
        return float(self.times[-1])

    @classmethod
    def zero(cls, forms: WeightedForms, times, H0=None) -> "SourceSpec":
        cx = forms.complex
        nt = len(times)
        H0 = np.zeros(cx.n_edges) if H0 is None else H0
        return cls(times, np.zeros((nt, cx.n_faces)), np.zeros((nt, cx.n_edges)), H0)

    @classmethod
    def from_functions(cls, forms: WeightedForms, times, H0, je=None, jm=None, G=None) -> "SourceSpec":
        """Sample callables ``je(t) -> face field``, ``jm(t) -> edge field``."""
        cx = forms.complex
        times = np.asarray(times, dtype=float)
        JE = np.array([je(t) for t in times]) if je else np.zeros((len(times), cx.n_faces))
        JM = np.array([jm(t) for t in times]) if jm else np.zeros((len(times), cx.n_edges))
        Gs = np.array([G(t) for t in times]) if G else None
        return cls(times, JE, JM, H0, Gs)

    def scaled(self, c: float) -> "SourceSpec":
        return SourceSpec(self.times, c * self.JE, c * self.JM, c * self.H0,
                          None if self.G is None else c * self.G)

    def __add__(self, other: "SourceSpec") -> "SourceSpec":
        if other.G is not None or self.G is not None:
            raise ValueError("sum of lifted source specs is not supported")
        return SourceSpec(self.times, self.JE + other.JE, self.JM + other.JM, self.H0 + other.H0)

    def magnetic_divergence(self, forms: WeightedForms) -> float:
        """max over time of the relative unweighted divergence residual of JM."""
        G0 = forms.G0
        worst = 0.0
        for jm in self.JM:
            r = G0.T @ (forms.M_edge @ jm)
            scale = abs(G0.T) @ np.abs(forms.M_edge @ jm)
            if scale.max() > 0:
                worst = max(worst, float(np.abs(r).max() / scale.max()))
        return worst


@dataclass(frozen=True, eq=False)
class LiftedSources:
    """Homogenized data for ``F = H - G`` plus the lifting and its diagnostics."""

    sources: SourceSpec
    G: np.ndarray
    compatibility_residual: np.ndarray


def time_derivative(samples: np.ndarray, dt: float) -> np.ndarray:
    """Centered differences on a uniform grid, one-sided at the ends."""
    return np.gradient(samples, dt, axis=0, edge_order=1)


def lift_boundary(forms: WeightedForms, sources: SourceSpec, tol: float = 1e-8) -> LiftedSources:
    """Subtract the boundary lifting G and check the compatibility condition

        div( mu G(t) - mu H0 - int_0^t J^M ds ) = 0

    in weak form against interior hat functions. Raises CompatibilityError
    when the relative residual exceeds ``tol`` at any sample time.
    """
    if sources.G is None:
        raise ValueError("source spec carries no boundary lifting")
    cx = forms.complex
    G = sources.G
    dt = sources.dt
    JM_int = np.concatenate([np.zeros((1, cx.n_edges)),
                             np.cumsum(0.5 * dt * (sources.JM[1:] + sources.JM[:-1]), axis=0)])
    G0T = forms.G0.T
    absG0T = abs(G0T)
    res = np.zeros(len(sources.times))
    MH0 = forms.M_mu_edge @ sources.H0
    for k in range(len(res)):
        a = forms.M_mu_edge @ G[k]
        c = forms.M_edge @ JM_int[k]
        r = G0T @ (a - MH0 - c)
        scale = (absG0T @ (np.abs(a) + np.abs(MH0) + np.abs(c))).max()
        res[k] = np.abs(r).max() / scale if scale > 0 else 0.0
    if res.max() > tol:
        raise CompatibilityError(
            f"boundary data violates the compatibility condition: relative residual "
            f"{res.max():.3e} > {tol:g} (worst at t = {sources.times[np.argmax(res)]:g})", res)

    dG = time_derivative(G, dt)
    solve_Me = factorize(forms.M_edge.tocsc())
    mu_dG = solve_Me((forms.M_mu_edge @ dG.T)).T
    JE = sources.JE - (forms.C @ G.T).T
    JM = sources.JM - mu_dG
    H0 = sources.H0 - G[0]
    if np.abs(H0[cx.boundary_edges]).max(initial=0.0) > 1e-12 * max(np.abs(sources.H0).max(), 1.0):
        warnings.warn("H0 does not match the boundary lifting at t = 0; tangential trace discarded",
                      stacklevel=2)
        H0 = H0.copy()
        H0[cx.boundary_edges] = 0.0
    return LiftedSources(SourceSpec(sources.times, JE, JM, H0), G, res)


def project_initial(basis: EigenBasis, H0) -> np.ndarray:
    """Coefficients ``(H0, psi_j)_{X_mu}``; a gradient part of H0 is dropped with a warning."""
    H0 = np.asarray(H0, dtype=float)
    forms = basis.forms
    if np.any(H0):
        if divergence_residual(forms, H0) > DIV_TOL:
            split = weighted_dirichlet_decompose(forms, H0)
            warnings.warn(f"initial field is not in X_mu; dropping gradient part of L2 norm "
                          f"{split.norm_grad_q:.3e}", stacklevel=2)
            H0 = split.zeta
    return expand(basis, H0)


@dataclass(frozen=True, eq=False)
class ReducedSystem:
    basis: EigenBasis
    A: np.ndarray
    Msigma: object
    S: np.ndarray
    times: np.ndarray
    jE: np.ndarray
    jM: np.ndarray
    b: np.ndarray
    _solve_sigma: object = field(repr=False)
    _MsA: np.ndarray = field(repr=False)
    _Ms_jE: np.ndarray = field(repr=False)

    @property
    def m(self) -> int:
        return self.A.shape[1]

    def forcing(self, t: float) -> np.ndarray:
        """Reduced forcing b(t), linear in time between samples."""
        return _interp(self.times, self.b, t)

    def electric_load(self, t: float) -> np.ndarray:
        return _interp(self.times, self.jE, t)

    def solve_sigma(self, rhs):
        return self._solve_sigma(rhs)


def _interp(times, samples, t):
    k = np.searchsorted(times, t, side="right") - 1
    k = int(np.clip(k, 0, len(times) - 2))
    w = (t - times[k]) / (times[k + 1] - times[k])
    if abs(w) < 1e-12:
        return samples[k]
    if abs(w - 1.0) < 1e-12:
        return samples[k + 1]
    return (1.0 - w) * samples[k] + w * samples[k + 1]


def reduce(basis: EigenBasis, forms: WeightedForms, sources: SourceSpec) -> ReducedSystem:
    """Assemble ``A``, the sigma Gram and the reduced forcing for ``sources``."""
    if forms.complex is not basis.forms.complex and forms.complex.spec != basis.forms.complex.spec:
        raise ValueError("basis and forms live on different grids")
    A = forms.curl_pairing() @ basis.psis
    Msigma = forms.M_sigma_face
    try:
        solve_sigma = factorize(Msigma.tocsc())
    except RuntimeError as exc:
        raise MaterialError(f"sigma Gram matrix is singular: {exc}") from exc
    MsA = solve_sigma(A)
    S = A.T @ MsA
    S = 0.5 * (S + S.T)
    jE = (forms.M_face @ sources.JE.T).T
    jM = (basis.psis.T @ (forms.M_edge @ sources.JM.T)).T
    Ms_jE = solve_sigma(jE.T).T if np.any(jE) else np.zeros_like(jE)
    b = Ms_jE @ A + jM
    return ReducedSystem(basis, A, Msigma, S, sources.times, jE, jM, b,
                         solve_sigma, MsA, Ms_jE)


@dataclass(frozen=True)
class GalerkinState:
    t: float
    h: np.ndarray


def step(system: ReducedSystem, state: GalerkinState, dt: float,
         scheme: str = "implicit-midpoint") -> GalerkinState:
    """One implicit step of ``dh/dt = -S h + b``."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    S, m = system.S, system.m
    t1 = state.t + dt
    if scheme == "implicit-midpoint":
        b = 0.5 * (system.forcing(state.t) + system.forcing(t1))
        lhs = np.eye(m) + 0.5 * dt * S
        rhs = state.h - 0.5 * dt * (S @ state.h) + dt * b
    elif scheme == "implicit-euler":
        lhs = np.eye(m) + dt * S
        rhs = state.h + dt * system.forcing(t1)
    else:
        raise ValueError(f"unknown scheme {scheme!r}; choose from {SCHEMES}")
    return GalerkinState(t1, sla.solve(lhs, rhs, assume_a="pos"))


def recover_E(system: ReducedSystem, h, jE=None, t: float | None = None) -> np.ndarray:
    """Electric field coefficients (one per face) solving ``Msigma e = A h - jE``."""
    if jE is None:
        jE = system.electric_load(t) if t is not None else np.zeros(system.A.shape[0])
    if np.any(jE):
        return system.solve_sigma(system.A @ h - jE)
    return system._MsA @ h


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Coefficients ``h[k]`` at ``times[k]`` plus everything needed to rebuild fields."""

    system: ReducedSystem
    sources: SourceSpec
    h: np.ndarray
    scheme: str
    lifting: np.ndarray | None = None
    H0: np.ndarray | None = None

    @property
    def times(self) -> np.ndarray:
        return self.system.times

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    @property
    def basis(self) -> EigenBasis:
        return self.system.basis

    @property
    def forms(self) -> WeightedForms:
        return self.system.basis.forms

    @cached_property
    def e(self) -> np.ndarray:
        """Electric coefficients at the sample times."""
        MsA = self.system._MsA
        return self.h @ MsA.T - self.system._Ms_jE

    # step-centered quantities used by the energy bookkeeping
    @cached_property
    def h_mid(self) -> np.ndarray:
        if self.scheme == "implicit-euler":
            return self.h[1:]
        return 0.5 * (self.h[1:] + self.h[:-1])

    def _mid(self, samples):
        if self.scheme == "implicit-euler":
            return samples[1:]
        return 0.5 * (samples[1:] + samples[:-1])

    @cached_property
    def e_mid(self) -> np.ndarray:
        return self._mid(self.e)

    @cached_property
    def jE_mid(self) -> np.ndarray:
        return self._mid(self.system.jE)

    @cached_property
    def jM_mid(self) -> np.ndarray:
        return self._mid(self.system.jM)

    @cached_property
    def dh(self) -> np.ndarray:
        return np.diff(self.h, axis=0) / self.dt

    def H(self, k: int) -> np.ndarray:
        """Magnetic edge field at sample ``k`` (lifting added back)."""
        H = self.basis.psis @ self.h[k]
        if self.lifting is not None:
            H = H + self.lifting[k]
        return H

    def E(self, k: int) -> np.ndarray:
        return self.e[k]

    @cached_property
    def ledger(self):
        from .analysis import energy_ledger
        return energy_ledger(self)


def integrate(system: ReducedSystem, h0, scheme: str = "implicit-midpoint") -> np.ndarray:
    """March ``h`` over the system's sample times (one step per sample interval)."""
    times = system.times
    out = np.zeros((len(times), system.m))
    out[0] = h0
    dt = times[1] - times[0]
    m = system.m
    S = system.S
    # constant step: factor once
    if scheme == "implicit-midpoint":
        lhs = sla.cho_factor(np.eye(m) + 0.5 * dt * S)
        expl = np.eye(m) - 0.5 * dt * S
        bmid = 0.5 * (system.b[1:] + system.b[:-1])
        for k in range(len(times) - 1):
            out[k + 1] = sla.cho_solve(lhs, expl @ out[k] + dt * bmid[k])
    elif scheme == "implicit-euler":
        lhs = sla.cho_factor(np.eye(m) + dt * S)
        for k in range(len(times) - 1):
            out[k + 1] = sla.cho_solve(lhs, out[k] + dt * system.b[k + 1])
    else:
        raise ValueError(f"unknown scheme {scheme!r}; choose from {SCHEMES}")
    return out


def solve(forms: WeightedForms, basis: EigenBasis, sources: SourceSpec,
          scheme: str = "implicit-midpoint", compat_tol: float = 1e-8) -> Trajectory:
    """Full pipeline: optional lifting, projection of H0, reduction, time stepping."""
    lifting = None
    work = sources
    if sources.G is not None:
        lifted = lift_boundary(forms, sources, tol=compat_tol)
        work, lifting = lifted.sources, lifted.G
    div = work.magnetic_divergence(forms)
    if div > 1e-6:
        warnings.warn(f"J^M is not discretely divergence-free (relative residual {div:.2e})",
                      stacklevel=2)
    system = reduce(basis, forms, work)
    h0 = project_initial(basis, work.H0)
    h = integrate(system, h0, scheme)
    return Trajectory(system, work, h, scheme, lifting, sources.H0)


def weak_residual(traj: Trajectory, n_tests: int = 8, seed: int = 0,
                  faraday_tests: str = "modes") -> tuple[float, float]:
    """Normalized residuals of the weak Ampere and Faraday laws.

    Ampere is tested with random electric fields at every sample time,
    Faraday with random combinations of the eigenmodes (``"modes"``) or random
    gradients of interior potentials (``"gradients"``) at every step midpoint.
    """
    rng = np.random.default_rng(seed)
    forms = traj.forms
    sysm = traj.system
    nF = forms.complex.n_faces
    phis = rng.standard_normal((nF, n_tests))
    phin = np.linalg.norm(phis, axis=0)
    amp = 0.0
    for k in range(len(traj.times)):
        terms = (sysm.A @ traj.h[k], sysm.Msigma @ traj.e[k], sysm.jE[k])
        r = phis.T @ (terms[0] - terms[1] - terms[2])
        scale = phin * sum(np.linalg.norm(v) for v in terms)
        amp = max(amp, _ratio(r, scale))

    psis = traj.basis.psis
    if faraday_tests == "modes":
        tests = psis @ rng.standard_normal((traj.basis.m, n_tests))
    elif faraday_tests == "gradients":
        tests = forms.G0 @ rng.standard_normal((forms.G0.shape[1], n_tests))
    else:
        raise ValueError(f"unknown test family {faraday_tests!r}")
    testn = np.linalg.norm(tests, axis=0)
    P = forms.curl_pairing()
    JM_mid = traj._mid(traj.sources.JM)
    far = 0.0
    for k in range(len(traj.times) - 1):
        terms = (P.T @ traj.e_mid[k], forms.M_mu_edge @ (psis @ traj.dh[k]),
                 forms.M_edge @ JM_mid[k])
        r = tests.T @ (terms[0] + terms[1] - terms[2])
        scale = testn * sum(np.linalg.norm(v) for v in terms)
        far = max(far, _ratio(r, scale))
    return amp, far


def _ratio(r, scale) -> float:
    """max |r| / scale with 0/0 read as 0."""
    ok = scale > 0
    return float(np.max(np.abs(r[ok]) / scale[ok])) if ok.any() else 0.0

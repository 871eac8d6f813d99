"""Energy bookkeeping, a-priori estimates, dual norms and regularity reports for
Galerkin trajectories."""
from __future__ import annotations

import math
import weakref
from dataclasses import dataclass

import numpy as np

from .assembly import DivergenceFreeProjector, WeightedForms, edge_mass, factorize
from .fields import edge_to_cells, edge_to_nodes, face_to_cells
from .galerkin import Trajectory, time_derivative
from .helmholtz import weighted_dirichlet_decompose
from .regularity import (campanato_seminorm, holder_norm, holder_seminorm,
                         morrey_seminorm)

__all__ = [
    "EnergyLedger", "energy_ledger", "energy_identity_residual", "AprioriCheck",
    "AprioriReport", "verify_apriori", "dual_norm", "parabolic_residual",
    "campanato_seminorm", "morrey_seminorm", "RegularityReport", "holder_report",
]


@dataclass(frozen=True, eq=False)
class EnergyLedger:
    """Energy terms at the sample times and the per-step identity residual.

    Node-valued columns (length nt): ``H_norm2_mu``, ``sigmaEE``, ``JM_H``,
    ``JE_E``, ``dtH_norm2_mu`` and ``dtH_dual``; ``dtH`` is the exact ODE
    right-hand side at the sample. ``step_residual`` (length nt - 1) is

        1/2 |h_{k+1}|^2 - 1/2 |h_k|^2 + dt [(sigma E, E) - (J^M, H) + (J^E, E)]_k

    with the bracket at the step midpoint (at the new level for implicit Euler).
    """

    times: np.ndarray
    H_norm2_mu: np.ndarray
    sigmaEE: np.ndarray
    JM_H: np.ndarray
    JE_E: np.ndarray
    dtH_norm2_mu: np.ndarray
    dtH_dual: np.ndarray
    step_residual: np.ndarray

    @property
    def initial_energy(self) -> float:
        return 0.5 * float(self.H_norm2_mu[0])

    def columns(self):
        return {
            "H_norm2_mu": self.H_norm2_mu, "sigmaEE": self.sigmaEE, "JM_H": self.JM_H,
            "JE_E": self.JE_E, "dtH_norm2_mu": self.dtH_norm2_mu, "dtH_dual": self.dtH_dual,
        }


def energy_ledger(traj: Trajectory) -> EnergyLedger:
    sysm = traj.system
    h, e = traj.h, traj.e
    H2 = np.einsum("ki,ki->k", h, h)
    sEE = np.einsum("ki,ki->k", e, (sysm.Msigma @ e.T).T)
    JM_H = np.einsum("ki,ki->k", h, sysm.jM)
    JE_E = np.einsum("ki,ki->k", e, sysm.jE)
    hdot = -h @ sysm.S + sysm.b
    dH2 = np.einsum("ki,ki->k", hdot, hdot)
    # psi_i are eigenvectors of the pencil, so (K + M)^-1 M psi_i = psi_i / (1 + lambda_i)
    dual = np.sqrt(np.einsum("ki,i->k", hdot ** 2, traj.basis.taus))

    dt = traj.dt
    hm, em = traj.h_mid, traj.e_mid
    diss = np.einsum("ki,ki->k", em, (sysm.Msigma @ em.T).T)
    work_m = np.einsum("ki,ki->k", hm, traj.jM_mid)
    work_e = np.einsum("ki,ki->k", em, traj.jE_mid)
    res = 0.5 * np.diff(H2) + dt * (diss - work_m + work_e)
    return EnergyLedger(traj.times, H2, sEE, JM_H, JE_E, dH2, dual, res)


def energy_identity_residual(traj: Trajectory, cumulative: bool = True) -> float:
    """Largest violation of the discrete energy identity.

    With ``cumulative`` the residual is summed from t = 0, i.e. the identity is
    checked in its integrated form at every sample time; otherwise the largest
    single-step residual is returned. Both vanish to rounding for the
    implicit midpoint rule; implicit Euler leaves an O(dt) cumulative defect.
    """
    r = traj.ledger.step_residual
    if r.size == 0:
        return 0.0
    return float(np.abs(np.cumsum(r)).max() if cumulative else np.abs(r).max())


# -- a-priori estimates ------------------------------------------------------

WEAK_FORMULA = "C_pre = 2 Lambda^2 exp(T)"
STRONG_FORMULA = ("C = 2 Lambda (2 Lambda^5 + Lambda + 1 + Lambda^2 exp(T)) + Lambda^2 exp(T), "
                  "applied to ||H0||^2_Hcurl + ||JE(0)||^2 + int(||JE||^2 + ||JM||^2 + ||dt JE||^2)")

WEAK_DERIVATION = """\
energy identity, Young with weights 1 and sigma:
  ||H(t)||_mu^2 + int (sigma E, E) <= ||H0||_mu^2 + Lambda int(||JE||^2 + ||JM||^2) + int ||H||_mu^2
Gronwall:   ... <= exp(T) [||H0||_mu^2 + Lambda int(||JE||^2 + ||JM||^2)]
structure:  ||H||^2 <= Lambda ||H||_mu^2,  ||E||^2 <= Lambda (sigma E, E),  ||H0||_mu^2 <= Lambda ||H0||^2
=> sup ||H||^2 and int ||E||^2 are each <= Lambda^2 exp(T) D_pre, so C_pre = 2 Lambda^2 exp(T)"""

STRONG_DERIVATION = """\
time-differentiated Ampere tested with E, Faraday tested with dt H:
  int ||dt H||_mu^2 + (sigma E(t), E(t)) <= Lambda ||E(0)||^2 + Lambda int ||JM||^2 + int ||dt JE||^2 + int ||E||^2
initial field: ||E(0)|| <= Lambda (||curl H0m|| + ||JE(0)||), ||curl H0m||^2 <= Lambda^2 ||curl H0||^2
  => ||E(0)||^2 <= 2 Lambda^4 (||curl H0||^2 + ||JE(0)||^2)
int ||E||^2 <= Lambda^2 exp(T) D_pre (weak estimate)
=> sup ||E||^2 and int ||dt H||^2 are each <= Lambda (2 Lambda^5 + Lambda + 1 + Lambda^2 exp(T)) D
   sup ||H||^2 <= Lambda^2 exp(T) D"""


def weak_constant(Lambda: float, T: float) -> float:
    return 2.0 * Lambda ** 2 * math.exp(T)


def strong_constant(Lambda: float, T: float) -> float:
    g = Lambda ** 2 * math.exp(T)
    return 2.0 * Lambda * (2.0 * Lambda ** 5 + Lambda + 1.0 + g) + g


@dataclass(frozen=True)
class AprioriCheck:
    name: str
    times: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    constants: np.ndarray
    formula: str
    derivation: str

    @property
    def passed(self) -> bool:
        return bool(np.all(self.lhs <= self.constants * self.rhs * (1 + 1e-12) + 1e-300))

    @property
    def ratio(self) -> float:
        """Largest measured lhs / rhs (0 when both vanish)."""
        ok = self.rhs > 0
        return float(np.max(self.lhs[ok] / self.rhs[ok])) if ok.any() else 0.0

    @property
    def constant_used(self) -> float:
        return float(self.constants[-1])

    def rows(self):
        for t, l, r, c in zip(self.times, self.lhs, self.rhs, self.constants):
            yield t, l, r, c, bool(l <= c * r * (1 + 1e-12) + 1e-300)


@dataclass(frozen=True)
class AprioriReport:
    weak: AprioriCheck
    strong: AprioriCheck
    Lambda: float

    @property
    def passed(self) -> bool:
        return self.weak.passed and self.strong.passed

    def summary(self) -> str:
        lines = [f"Lambda = {self.Lambda:g}"]
        for c in (self.weak, self.strong):
            lines.append(f"[{c.name}] {'PASS' if c.passed else 'FAIL'}  lhs/rhs max = {c.ratio:.4g}  "
                         f"constant = {c.constant_used:.4g}")
            lines.append(f"  {c.formula}")
            lines.extend("  " + s for s in c.derivation.splitlines())
        return "\n".join(lines)


def _cumtrapz(y, dt):
    return np.concatenate([[0.0], np.cumsum(0.5 * dt * (y[1:] + y[:-1]))])


def verify_apriori(traj: Trajectory, Lambda: float, T: float | None = None) -> AprioriReport:
    """Evaluate both sides of the weak and strong energy estimates at every sample time.

    Norms are unweighted L^2 norms of the discrete fields; time integrals use
    the trapezoidal rule and ``dt JE`` centered differences. The constant at
    time t uses exp(t) from the replayed Gronwall argument (``T`` caps it).
    """
    if Lambda < 1:
        raise ValueError("Lambda bounds both a coefficient and its inverse, so Lambda >= 1")
    forms = traj.forms
    src = traj.sources
    times = traj.times
    if T is not None:
        keep = times <= T * (1 + 1e-12)
        times = times[keep]
    nt = len(times)
    dt = traj.dt
    psis = traj.basis.psis

    H = psis @ traj.h[:nt].T                            # (nE, nt)
    H2 = np.einsum("ik,ik->k", H, forms.M_edge @ H)
    e = traj.e[:nt].T
    E2 = np.einsum("ik,ik->k", e, forms.M_face @ e)
    JE = src.JE[:nt].T
    JM = src.JM[:nt].T
    JE2 = np.einsum("ik,ik->k", JE, forms.M_face @ JE)
    JM2 = np.einsum("ik,ik->k", JM, forms.M_edge @ JM)
    dJE = time_derivative(src.JE, dt)[:nt].T
    dJE2 = np.einsum("ik,ik->k", dJE, forms.M_face @ dJE)
    hdot = -traj.h[:nt] @ traj.system.S + traj.system.b[:nt]
    dH = psis @ hdot.T
    dH2 = np.einsum("ik,ik->k", dH, forms.M_edge @ dH)

    H0 = src.H0
    H0_2 = forms.norm_l2(H0) ** 2
    H0_curl2 = forms.curl_norm(H0) ** 2

    supH = np.maximum.accumulate(H2)
    supE = np.maximum.accumulate(E2)
    intE = _cumtrapz(E2, dt)
    intJ = _cumtrapz(JE2 + JM2, dt)
    intdJE = _cumtrapz(dJE2, dt)
    intdH = _cumtrapz(dH2, dt)

    tt = times - times[0]
    weak = AprioriCheck(
        "weak", times, intE + supH, H0_2 + intJ,
        np.array([weak_constant(Lambda, t) for t in tt]), WEAK_FORMULA, WEAK_DERIVATION)
    strong = AprioriCheck(
        "strong", times, supE + supH + intdH,
        H0_2 + H0_curl2 + JE2[0] + intJ + intdJE,
        np.array([strong_constant(Lambda, t) for t in tt]), STRONG_FORMULA, STRONG_DERIVATION)
    return AprioriReport(weak, strong, float(Lambda))


# -- dual norm ------------------------------------------------------------------

_RIESZ = weakref.WeakKeyDictionary()


def _riesz_solver(forms: WeightedForms):
    solver = _RIESZ.get(forms)
    if solver is None:
        A = forms.interior(forms.K_curlcurl_mu) + forms.interior(forms.M_mu_edge)
        solver = (factorize(A.tocsc()), DivergenceFreeProjector(forms))
        _RIESZ[forms] = solver
    return solver


def dual_norm(forms: WeightedForms, field) -> float | np.ndarray:
    """``sqrt(f^T (K + M)^-1 f)`` with ``f = M_mu field`` on interior edges.

    The field is first projected onto the discrete X_mu. A 2-D input is
    treated column-wise.
    """
    field = np.asarray(field, dtype=float)
    solve, proj = _riesz_solver(forms)
    v = forms.R @ field
    if not np.any(v):
        return 0.0 if field.ndim == 1 else np.zeros(field.shape[1])
    v = proj(v)
    f = forms.interior(forms.M_mu_edge) @ v
    y = solve(f)
    val = np.sqrt(np.maximum(np.einsum("i...,i...->...", f, y), 0.0))
    return float(val) if field.ndim == 1 else val


# -- parabolic form ---------------------------------------------------------------

def parabolic_residual(traj: Trajectory, forms: WeightedForms | None = None,
                       tests: str = "modes") -> np.ndarray:
    """Relative residual of ``mu dt H + curl(sigma^-1 curl H) = curl(sigma^-1 JE) + JM``
    at the step midpoints.

    ``tests="modes"`` tests against the eigenbasis; for constant sigma the
    parabolic form then coincides with the reduced system and the residual is
    rounding-level, while for variable sigma it measures the gap between the
    mixed and the primal discretization. ``tests="edges"`` tests against every
    interior edge function and so also sees the modal truncation.

    ``sigma^-1`` enters through the face mass matrix assembled from cell values
    of ``sigma^-1``, which is the harmonic mean across faces between cells.
    Each entry is ``|r| / (sum of term norms)`` in the Euclidean norm on
    interior edges; 0/0 is read as 0.
    """
    forms = traj.forms if forms is None else forms
    C = forms.C
    Mi = forms.M_invsigma_face
    psis = traj.basis.psis
    if tests == "modes":
        P = psis.T
    elif tests == "edges":
        P = forms.R
    else:
        raise ValueError(f"unknown test family {tests!r}")
    JE_mid = traj._mid(traj.sources.JE)
    JM_mid = traj._mid(traj.sources.JM)
    out = np.zeros(len(traj.times) - 1)
    for k in range(len(out)):
        H = psis @ traj.h_mid[k]
        terms = (
            forms.M_mu_edge @ (psis @ traj.dh[k]),
            C.T @ (Mi @ (C @ H)),
            -(C.T @ (Mi @ JE_mid[k])),
            -(forms.M_edge @ JM_mid[k]),
        )
        terms = [P @ t for t in terms]
        r = np.linalg.norm(sum(terms))
        scale = sum(np.linalg.norm(t) for t in terms)
        out[k] = r / scale if scale > 0 else 0.0
    return out


# -- regularity -------------------------------------------------------------------

@dataclass(frozen=True)
class RegularityReport:
    """Per-sample-time regularity quantities (all seminorms are sampled sups).

    ``lhs`` is the Hoelder norm of the nodal reconstruction of H, ``rhs`` the
    bracket of the Hoelder estimate built from ledger quantities, and
    ``constant = lhs / rhs``.
    """

    times: np.ndarray
    alpha: float
    lam: float
    campanato_zeta: np.ndarray
    campanato_grad_q: np.ndarray
    campanato_H: np.ndarray
    campanato_E: np.ndarray
    morrey_H: np.ndarray
    morrey_E: np.ndarray
    holder_H: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    constant: np.ndarray
    divergent: bool = False
    label: str = "sampled seminorm"

    def rows(self):
        for k, t in enumerate(self.times):
            yield (t, self.campanato_zeta[k], self.campanato_grad_q[k], self.campanato_H[k],
                   self.campanato_E[k], self.morrey_H[k], self.morrey_E[k], self.holder_H[k],
                   self.lhs[k], self.rhs[k], self.constant[k])

    COLUMNS = ("t", "campanato_zeta", "campanato_grad_q", "campanato_H", "campanato_E",
               "morrey_H", "morrey_E", "holder_H", "lhs", "rhs", "constant")


def _node_mu(forms: WeightedForms) -> np.ndarray:
    cx = forms.complex
    mu = forms.model.mu
    s = np.bincount(cx.cell_nodes.ravel(), weights=np.repeat(mu, 8), minlength=cx.n_nodes)
    c = np.bincount(cx.cell_nodes.ravel(), minlength=cx.n_nodes)
    return s / c


def holder_report(traj: Trajectory, forms: WeightedForms | None = None, basis=None,
                  alpha: float = 0.5, stride: int = 1, seed: int = 0) -> RegularityReport:
    """Refinement-comparable regularity data along a trajectory.

    At each selected sample time H is split as ``grad q + zeta`` (unweighted
    Dirichlet splitting) and Campanato seminorms at ``lambda = 2 alpha + 3`` are
    computed for zeta, grad q, H and E on cell samples. The Hoelder norm of H
    uses the nodal reconstruction; the right-hand side collects

        ||mu H0||_C + ||E(t)|| + ||H(t)|| + ||mu dt H(t)||
          + int_0^t ||JM||_C + ||JM(t)|| + ||JE(t)||_C.
    """
    if not 0.0 < alpha <= 0.5:
        raise ValueError("alpha must lie in (0, 1/2]")
    forms = traj.forms if forms is None else forms
    basis = traj.basis if basis is None else basis
    cx = forms.complex
    lam = 2.0 * alpha + 3.0
    spacing = cx.spacing
    ext = np.asarray(cx.spec.extents, dtype=float)
    nodes = cx.node_coords
    nshape = cx.node_shape
    cells = cx.cell_centers
    cshape = tuple(cx.spec.cells)
    mu_n = _node_mu(forms)
    src = traj.sources
    idx = np.arange(0, len(traj.times), stride)

    def cnorm_edges(v):
        return holder_norm(nodes, edge_to_nodes(cx, v), alpha, nshape, seed=seed)

    def cnorm_faces(v):
        return holder_norm(cells, face_to_cells(cx, v), alpha, cshape, seed=seed)

    muH0 = holder_norm(nodes, mu_n[:, None] * edge_to_nodes(cx, src.H0), alpha, nshape, seed=seed)
    JMc = np.array([cnorm_edges(v) if np.any(v) else 0.0 for v in src.JM])
    intJMc = _cumtrapz(JMc, traj.dt)
    hdot = -traj.h @ traj.system.S + traj.system.b
    M_mu2 = edge_mass(cx, forms.model.mu ** 2)

    out = {k: [] for k in RegularityReport.COLUMNS[1:]}
    divergent = False
    for k in idx:
        H = traj.H(k)
        split = weighted_dirichlet_decompose(forms, H, weighted=False)
        gq = H - split.zeta
        sem = {
            "campanato_zeta": campanato_seminorm(edge_to_cells(cx, split.zeta), spacing, lam, ext),
            "campanato_grad_q": campanato_seminorm(edge_to_cells(cx, gq), spacing, lam, ext),
            "campanato_H": campanato_seminorm(edge_to_cells(cx, H), spacing, lam, ext),
            "campanato_E": campanato_seminorm(face_to_cells(cx, traj.e[k]), spacing, lam, ext),
            "morrey_H": morrey_seminorm(edge_to_cells(cx, H), spacing, lam, ext),
            "morrey_E": morrey_seminorm(face_to_cells(cx, traj.e[k]), spacing, lam, ext),
        }
        for name, s in sem.items():
            out[name].append(s.value)
            divergent |= s.divergent
        lhs = holder_norm(nodes, edge_to_nodes(cx, H), alpha, nshape, seed=seed)
        dH = basis.psis @ hdot[k]
        rhs = (muH0 + forms.norm_face(traj.e[k]) + forms.norm_l2(H)
               + float(np.sqrt(dH @ (M_mu2 @ dH)))
               + intJMc[k] + forms.norm_l2(src.JM[k])
               + (cnorm_faces(src.JE[k]) if np.any(src.JE[k]) else 0.0))
        out["holder_H"].append(holder_seminorm(nodes, edge_to_nodes(cx, H), alpha, nshape, seed=seed))
        out["lhs"].append(lhs)
        out["rhs"].append(rhs)
        out["constant"].append(lhs / rhs if rhs > 0 else 0.0)
    return RegularityReport(traj.times[idx], alpha, lam,
                            *(np.asarray(out[c]) for c in RegularityReport.COLUMNS[1:]),
                            divergent=divergent)

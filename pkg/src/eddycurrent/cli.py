"""Command-line entry point.

Exit codes: 0 success, 2 invalid input (config, materials, boundary data),
3 solver failure, 4 verification failure.
"""
from __future__ import annotations

import argparse
import logging
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import config as cfg
from .analysis import energy_identity_residual, holder_report, verify_apriori
from .assembly import assemble_forms
from .eigenbase import harmonic_dimension, magnetic_eigenbasis
from .errors import (CompatibilityError, ConvergenceError, EddyCurrentError, GridMismatchError,
                     GridSizeError, MaterialError, VerificationError)
from .fields import edge_to_cells, interpolate_edges, interpolate_faces
from .galerkin import SourceSpec, solve
from .grid import GridSpec, build_complex
from .helmholtz import neumann_decompose, weighted_dirichlet_decompose
from .io import write_csv, write_snapshot, write_trajectory, write_vtk
from .manufactured import CASES, convergence_table
from .materials import MaterialModel, _as_tensor, layered, validate

logger = logging.getLogger("eddycurrent")

EXIT_OK, EXIT_VALIDATION, EXIT_SOLVER, EXIT_VERIFY = 0, 2, 3, 4


class ValidationFailure(EddyCurrentError):
    pass


# -- scenario -> objects ---------------------------------------------------------

def build_grid(sc: cfg.Scenario):
    return build_complex(GridSpec(sc.cells, tuple(sc["grid.extents"])))


def build_model(sc: cfg.Scenario, spec: GridSpec) -> MaterialModel:
    mu = np.full(spec.n_cells, sc["mu.constant"])
    if sc["mu.file"] is not None:
        mu = np.loadtxt(sc.path("mu.file"), dtype=float).ravel()
        if mu.size != spec.n_cells:
            raise GridMismatchError(f"mu.file holds {mu.size} values for {spec.n_cells} cells")
    zc = np.repeat((np.arange(spec.cells[2]) + 0.5) * spec.spacing[2], spec.cells[0] * spec.cells[1])
    for layer in sc.layers("mu"):
        z0, z1 = layer["z"]
        mu = np.where((zc >= z0) & (zc < z1), layer["value"], mu)
    lam = sc["material.lambda"]
    sig_layers = sc.layers("sigma")
    background = _as_tensor(np.array(sc["sigma.constant"]).squeeze())
    if sig_layers:
        # first matching layer wins; sigma.constant fills the cells no layer covers
        stack = [(l["z"][0], l["z"][1], np.array(l["tensor"]).squeeze()) for l in sig_layers]
        model = layered(spec, stack + [(-np.inf, np.inf, background)], mu=mu, lambda_bound=lam)
    else:
        model = MaterialModel.uniform(spec, mu, background, lambda_bound=lam)
    report = validate(model)
    if not report.feasible:
        raise ValidationFailure(f"materials violate the structural bounds: {report.summary()}")
    return model


def _profile(kind: str, vec):
    vec = np.asarray(vec, dtype=float)
    if kind == "uniform":
        return lambda X: np.broadcast_to(vec, X.shape).copy()

    def cavity(X):
        s = np.sin(np.pi * X)
        return np.stack([vec[0] * s[:, 1] * s[:, 2], vec[1] * s[:, 0] * s[:, 2],
                         vec[2] * s[:, 0] * s[:, 1]], axis=1)
    return cavity


def _time_factor(sc, times):
    kind, w, T = sc["sources.time"], sc["sources.omega"], sc["time.T"]
    if kind == "sin":
        return np.sin(w * times)
    if kind == "cos":
        return np.cos(w * times)
    if kind == "ramp":
        return times / T
    return np.ones_like(times)


def build_sources(sc: cfg.Scenario, forms, basis, times, rng) -> SourceSpec:
    cx = forms.complex
    nt = len(times)
    H0 = build_initial(sc, forms, basis, rng)
    kind = sc["sources.kind"]
    if kind == "zero":
        src = SourceSpec.zero(forms, times, H0)
    elif kind == "file":
        data = np.load(sc.path("sources.file"))
        JE, JM = np.asarray(data["JE"], float), np.asarray(data["JM"], float)
        if JE.shape != (nt, cx.n_faces) or JM.shape != (nt, cx.n_edges):
            raise GridMismatchError(f"source file arrays {JE.shape}, {JM.shape} do not match "
                                    f"({nt}, {cx.n_faces}) and ({nt}, {cx.n_edges})")
        src = SourceSpec(times, JE, JM, H0)
    else:
        prof = sc["sources.profile"]
        je = interpolate_faces(cx, _profile(prof, sc["sources.je"]))
        jm = interpolate_edges(cx, _profile(prof, sc["sources.jm"]))
        if kind == "table":
            tab = np.loadtxt(sc.path("sources.table"), delimiter=",", skiprows=1, ndmin=2)
            if tab.shape[1] != 3:
                raise cfg.ConfigError("sources.table needs columns t,je_scale,jm_scale")
            a_e = np.interp(times, tab[:, 0], tab[:, 1])
            a_m = np.interp(times, tab[:, 0], tab[:, 2])
        else:
            a_e = a_m = _time_factor(sc, times)
        src = SourceSpec(times, np.outer(a_e, je), np.outer(a_m, jm), H0)
    if sc["boundary.file"] is not None:
        G = np.asarray(np.load(sc.path("boundary.file"))["G"], float)
        if G.shape != (nt, cx.n_edges):
            raise GridMismatchError(f"boundary lifting has shape {G.shape}, expected ({nt}, {cx.n_edges})")
        src = SourceSpec(times, src.JE, src.JM, src.H0, G)
    return src


def build_initial(sc: cfg.Scenario, forms, basis, rng):
    cx = forms.complex
    kind, amp = sc["initial.kind"], sc["initial.amplitude"]
    if kind == "zero":
        return np.zeros(cx.n_edges)
    if kind == "mode":
        k = sc["initial.mode"]
        if not 1 <= k <= basis.m:
            raise cfg.ConfigError(f"initial.mode = {k} outside 1..{basis.m}")
        return amp * basis.psis[:, k - 1]
    if kind == "cavity":
        H0 = amp * interpolate_edges(cx, _profile("cavity", (0.0, 0.0, 1.0)))
        H0[cx.boundary_edges] = 0.0
        return H0
    if kind == "random":
        return amp * (basis.psis @ rng.standard_normal(basis.m))
    H0 = np.load(sc.path("initial.file"))
    if H0.shape != (cx.n_edges,):
        raise GridMismatchError(f"initial field has shape {H0.shape}, expected ({cx.n_edges},)")
    return H0


def _setup(sc: cfg.Scenario, with_basis=True):
    sc.validate()
    cx = build_grid(sc)
    model = build_model(sc, cx.spec)
    forms = assemble_forms(cx, model)
    basis = magnetic_eigenbasis(forms, sc["eigen.modes"], tol=sc["eigen.tol"],
                                seed=sc["run.seed"]) if with_basis else None
    return cx, model, forms, basis


def _run_solve(sc: cfg.Scenario):
    cx, model, forms, basis = _setup(sc)
    rng = np.random.default_rng(sc["run.seed"])
    times = np.linspace(0.0, sc["time.T"], sc.n_steps + 1)
    src = build_sources(sc, forms, basis, times, rng)
    traj = solve(forms, basis, src, scheme=sc["time.scheme"], compat_tol=sc["boundary.tol"])
    return cx, model, forms, basis, traj


# -- subcommands -----------------------------------------------------------------

def cmd_grid_info(sc, out):
    sc.validate()
    cx = build_grid(sc)
    print(cx.summary())
    print(f"interior edges: {len(cx.interior_edges)}, interior nodes: {len(cx.interior_nodes)}")
    print(f"max|C G| = {abs(cx.C @ cx.G).max()}, max|D C| = {abs(cx.D @ cx.C).max()}")
    return EXIT_OK


def cmd_decompose(sc, out):
    cx, model, forms, _ = _setup(sc, with_basis=False)
    rng = np.random.default_rng(sc["run.seed"])
    F = rng.standard_normal(cx.n_edges)
    ns = neumann_decompose(forms, F)
    ds = weighted_dirichlet_decompose(forms, F)
    G = forms.G
    nF_mu = forms.norm_mu(F)
    rows = [
        ("neumann", ns.norm_F, ns.norm_grad_u, ns.norm_eta,
         abs(ns.norm_grad_u ** 2 + ns.norm_eta ** 2 - ns.norm_F ** 2) / ns.norm_F ** 2),
        # the weighted split is orthogonal in the mu inner product
        ("dirichlet", ds.norm_F, ds.norm_grad_q, ds.norm_zeta,
         abs(forms.norm_mu(G @ ds.q) ** 2 + forms.norm_mu(ds.zeta) ** 2 - nF_mu ** 2) / nF_mu ** 2),
    ]
    write_csv(out / "decompose.csv", ["split", "norm_F", "norm_grad", "norm_remainder",
                                      "pythagoras_residual"], rows)
    for r in rows:
        print(f"{r[0]:>9}: |F| = {r[1]:.6g}  |grad| = {r[2]:.6g}  |rem| = {r[3]:.6g}")
    return EXIT_OK


def cmd_eigen(sc, out):
    cx, model, forms, basis = _setup(sc)
    write_csv(out / "eigenvalues.csv", ["index", "lambda"],
              [(i + 1, lam) for i, lam in enumerate(basis.lambdas)])
    for i in range(basis.m):
        write_vtk(out / f"mode_{i + 1:03d}.vtk", cx, {"psi": edge_to_cells(cx, basis.psis[:, i])},
                  title=f"mode {i + 1} lambda {basis.lambdas[i]!r}")
    print(f"{basis.m} modes, harmonic dimension {harmonic_dimension(basis)}")
    for i, lam in enumerate(basis.lambdas):
        print(f"  {i + 1:3d}  {lam:.10g}  ({lam / math.pi ** 2:.6f} pi^2)")
    return EXIT_OK


def _write_solution(sc, out, cx, traj):
    write_trajectory(out / "trajectory.csv", traj)
    stride = sc["output.snapshot-stride"]
    if stride > 0:
        for k in range(0, len(traj.times), stride):
            write_snapshot(out / "snapshots", cx, k, H=traj.H(k), E=traj.e[k])


def cmd_solve(sc, out):
    cx, model, forms, basis, traj = _run_solve(sc)
    _write_solution(sc, out, cx, traj)
    res = energy_identity_residual(traj)
    print(f"solved {len(traj.times) - 1} steps of {traj.scheme} with {basis.m} modes; "
          f"energy identity residual {res:.3e}")
    return EXIT_OK


def cmd_verify(sc, out):
    cx, model, forms, basis, traj = _run_solve(sc)
    _write_solution(sc, out, cx, traj)
    rep = verify_apriori(traj, model.lambda_bound)
    for check in (rep.weak, rep.strong):
        write_csv(out / f"verify_{check.name}.csv", ["t", "lhs", "rhs", "constant", "pass"], check.rows())
    res = energy_identity_residual(traj)
    e0 = max(traj.ledger.initial_energy, np.finfo(float).tiny)
    scale = max(e0, float(np.max(traj.ledger.H_norm2_mu)))
    energy_ok = traj.scheme != "implicit-midpoint" or res <= sc["verify.energy-tol"] * scale
    text = rep.summary() + f"\nenergy identity residual {res:.3e} ({'ok' if energy_ok else 'FAIL'})\n"
    (out / "verify.txt").write_text(text)
    print(text, end="")
    if not (rep.passed and energy_ok):
        raise VerificationError("a-priori or energy check failed")
    return EXIT_OK


def cmd_morrey(sc, out):
    cx, model, forms, basis, traj = _run_solve(sc)
    stride = max(sc["output.snapshot-stride"], 1)
    rep = holder_report(traj, alpha=sc["verify.alpha"], stride=stride, seed=sc["run.seed"])
    write_csv(out / "regularity.csv", rep.COLUMNS, rep.rows())
    lines = [f"{rep.label}s at lambda = {rep.lam:g} (alpha = {rep.alpha:g})",
             f"empirical Hoelder constant C(t): max {np.max(rep.constant):.4g}",
             f"divergence flagged: {rep.divergent}"]
    (out / "regularity.txt").write_text("\n".join(lines) + "\n")
    print("\n".join(lines))
    return EXIT_OK


def cmd_manufactured(sc, out):
    sc.validate()
    case = sc["manufactured.case"]
    if case not in CASES:
        raise cfg.ConfigError(f"unknown manufactured case {case!r}; registered: {', '.join(CASES)}")
    grids = sc["manufactured.grids"]
    if "grid.n" in sc.values:
        grids = tuple(g for g in grids if g <= sc["grid.n"]) or (sc["grid.n"],)
    dt = sc["time.dt"] if "time.dt" in sc.values else None
    rows = convergence_table(case, grids, dt=dt, seed=sc["run.seed"])
    cols = ["case", "n", "h", "L2_error_H", "L2_error_E", "rate_H", "rate_E"]
    write_csv(out / "convergence.csv", cols, [[r[c] for c in cols] for r in rows])
    for r in rows:
        print(f"{r['case']} n={r['n']:3d} h={r['h']:.4g} errH={r['L2_error_H']:.4e} "
              f"errE={r['L2_error_E']:.4e} rateH={r['rate_H']:.3f} rateE={r['rate_E']:.3f}")
    rate = rows[-1]["rate_H"]
    if len(rows) > 1 and not math.isnan(rate) and rate < sc["manufactured.min-rate"]:
        raise VerificationError(f"observed H rate {rate:.3f} below {sc['manufactured.min-rate']}")
    return EXIT_OK


COMMANDS = {
    "grid-info": cmd_grid_info, "decompose": cmd_decompose, "eigen": cmd_eigen,
    "solve": cmd_solve, "verify": cmd_verify, "morrey": cmd_morrey,
    "manufactured": cmd_manufactured,
}


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="eddycurrent", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", type=Path, help="scenario file (key = value lines)")
        s.add_argument("--out", type=Path, help="output directory (overrides output.dir)")
        s.add_argument("--seed", type=int, help="random seed (overrides run.seed, default 42)")
        s.add_argument("--grid", type=int, help="cells per axis (overrides grid.n)")
        s.add_argument("--modes", type=int, help="number of eigenmodes (overrides eigen.modes)")
        if name == "manufactured":
            s.add_argument("--case", choices=sorted(CASES), help="manufactured case id")
    return p


def scenario_from_args(args) -> cfg.Scenario:
    sc = cfg.load(args.config) if args.config else cfg.Scenario()
    upd = {"run.seed": args.seed, "grid.n": args.grid, "eigen.modes": args.modes,
           "output.dir": str(args.out) if args.out else None,
           "manufactured.case": getattr(args, "case", None)}
    sc = sc.with_values(**upd)
    if args.grid is not None and "grid.cells" in sc.values:
        vals = dict(sc.values)
        del vals["grid.cells"]
        sc = cfg.Scenario(vals, sc.base)
    return sc


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        sc = scenario_from_args(args)
        out = Path(args.out) if args.out else sc.path("output.dir")
        out.mkdir(parents=True, exist_ok=True)
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return COMMANDS[args.command](sc, out)
    except (cfg.ConfigError, ValidationFailure, MaterialError, GridSizeError, GridMismatchError,
            CompatibilityError, OSError, KeyError, ValueError) as exc:
        # the library raises ValueError only for inconsistent input (e.g. too many modes)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except VerificationError as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except (ConvergenceError, RuntimeError, np.linalg.LinAlgError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())

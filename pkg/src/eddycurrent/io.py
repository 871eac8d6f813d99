"""CSV and legacy-VTK writers. Output is byte-deterministic for equal input."""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .fields import edge_to_cells, face_to_cells
from .grid import Complex


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    return path


def read_csv(path):
    """Header and float rows of a file written by :func:`write_csv`."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        rows = [[float(x) for x in line.strip().split(",")] for line in fh if line.strip()]
    return header, np.array(rows)


def trajectory_header(m: int):
    return (["t"] + [f"h_{i + 1}" for i in range(m)]
            + ["H_norm2_mu", "sigmaEE", "JM_H", "JE_E", "dtH_norm2_mu", "dtH_dual"])


def write_trajectory(path, traj) -> Path:
    led = traj.ledger
    cols = led.columns()
    rows = []
    for k, t in enumerate(traj.times):
        rows.append([t, *traj.h[k], *(cols[c][k] for c in cols)])
    return write_csv(path, trajectory_header(traj.h.shape[1]), rows)


def write_vtk(path, complex: Complex, vectors: dict | None = None, scalars: dict | None = None,
              title: str = "eddycurrent field") -> Path:
    """Cell-centered data as STRUCTURED_POINTS (one lattice point per cell)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    nx, ny, nz = complex.spec.cells
    h = complex.spacing
    lines = [
        "# vtk DataFile Version 3.0", title, "ASCII", "DATASET STRUCTURED_POINTS",
        f"DIMENSIONS {nx} {ny} {nz}",
        "ORIGIN " + " ".join(_fmt(0.5 * x) for x in h),
        "SPACING " + " ".join(_fmt(x) for x in h),
        f"POINT_DATA {complex.n_cells}",
    ]
    for name, arr in (vectors or {}).items():
        lines.append(f"VECTORS {name} double")
        lines.extend(" ".join(_fmt(x) for x in row) for row in np.asarray(arr, dtype=float))
    for name, arr in (scalars or {}).items():
        lines.append(f"SCALARS {name} double 1")
        lines.append("LOOKUP_TABLE default")
        lines.extend(_fmt(x) for x in np.asarray(arr, dtype=float))
    path.write_text("\n".join(lines) + "\n")
    return path


def write_snapshot(outdir, complex: Complex, k: int, H=None, E=None) -> list[Path]:
    out = []
    if H is not None:
        out.append(write_vtk(Path(outdir) / f"H_{k:05d}.vtk", complex,
                             {"H": edge_to_cells(complex, H)}, title=f"H step {k}"))
    if E is not None:
        out.append(write_vtk(Path(outdir) / f"E_{k:05d}.vtk", complex,
                             {"E": face_to_cells(complex, E)}, title=f"E step {k}"))
    return out

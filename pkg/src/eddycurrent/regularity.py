"""Sampled Morrey/Campanato seminorms and empirical Hoelder seminorms of grid fields.

Ball integrals are evaluated as discrete convolutions of the cell-sampled
field with a ball stencil. Cells cut by the sphere carry their covered
volume fraction, so the ball volume stays close to ``4/3 pi rho^3`` even for
radii of one or two cells.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

LAMBDA_MAX = 6.0
N_PAIRS = 10_000
MIN_CELLS = 4


@dataclass(frozen=True)
class Seminorm:
    """Sampled sup of ``rho^-lambda * int_{B cap Omega} |u - c|^2`` (squared seminorm).

    ``divergent`` is set when the sup sits at the smallest sampled radius with
    ``lambda > 5``, where the true seminorm of a non-constant field is infinite.
    """

    value: float
    rho: float
    center: tuple
    lam: float
    divergent: bool
    label: str = "sampled seminorm"

    def __float__(self):
        return self.value


def _as_components(u, cells):
    u = np.asarray(u, dtype=float)
    cells = tuple(int(c) for c in cells)
    n = int(np.prod(cells))
    if u.shape[:3] == cells:
        arr = u
    elif u.shape[0] == n:
        arr = u.reshape(cells + u.shape[1:], order="F")
    else:
        raise ValueError(f"field of shape {u.shape} does not match cells {cells}")
    if arr.ndim == 3:
        arr = arr[..., None]
    return arr.reshape(cells + (-1,))


def dyadic_radii(spacing, extents, min_cells: int = MIN_CELLS) -> np.ndarray:
    """Radii ``2^k h`` from ``min_cells * h`` up to the domain diameter.

    On piecewise-constant samples a ball of one or two cells overstates the
    mean oscillation of a linear field by 60% and 12%; from four cells on the
    bias is below 3%, independently of the grid size.
    """
    h = float(np.min(spacing))
    diam = float(np.linalg.norm(extents))
    r0 = min(h * min_cells, diam)
    k = int(np.floor(np.log2(diam / r0))) if diam > r0 else 0
    return r0 * 2.0 ** np.arange(k + 1)


def ball_stencil(rho: float, spacing, sub: int = 8) -> np.ndarray:
    """Fraction of each lattice cell covered by the ball of radius ``rho``
    (midpoint rule with ``sub**3`` points per cell)."""
    spacing = np.asarray(spacing, dtype=float)
    r = np.ceil(rho / spacing).astype(int) + 1
    frac = (np.arange(sub) + 0.5) / sub - 0.5
    axes = [np.add.outer(np.arange(-ri, ri + 1), frac).ravel() * hi for ri, hi in zip(r, spacing)]
    inside = [(a ** 2) for a in axes]
    d2 = inside[0][:, None, None] + inside[1][None, :, None] + inside[2][None, None, :]
    hit = (d2 <= rho * rho).astype(float)
    shape = tuple(2 * ri + 1 for ri in r)
    hit = hit.reshape(shape[0], sub, shape[1], sub, shape[2], sub)
    return hit.mean(axis=(1, 3, 5))


def _scan(u, spacing, extents, lam, subtract_mean, radii=None):
    if not 0.0 < lam <= LAMBDA_MAX:
        raise ValueError(f"lambda must lie in (0, {LAMBDA_MAX:g}], got {lam}")
    spacing = np.asarray(spacing, dtype=float)
    cells = u.shape[:3]
    vol = float(np.prod(spacing))
    # shifting by a sample value keeps constants exactly zero after mean subtraction
    if subtract_mean:
        u = u - u[0, 0, 0]
    ones = np.ones(cells)
    best = (0.0, 0.0, (0, 0, 0))
    radii = dyadic_radii(spacing, extents) if radii is None else radii
    for rho in radii:
        w = ball_stencil(rho, spacing)
        S0 = fftconvolve(ones, w, mode="same")
        total = np.zeros(cells)
        for c in range(u.shape[3]):
            uc = u[..., c]
            if not np.any(uc):
                continue
            S2 = fftconvolve(uc * uc, w, mode="same")
            if subtract_mean:
                S1 = fftconvolve(uc, w, mode="same")
                total += S2 - S1 * S1 / S0
            else:
                total += S2
        total = np.maximum(total, 0.0) * vol * rho ** (-lam)
        i = np.unravel_index(int(np.argmax(total)), cells)
        if total[i] > best[0]:
            best = (float(total[i]), float(rho), tuple(int(a) for a in i))
    value, rho, center = best
    divergent = bool(lam > 5.0 and value > 0 and np.isclose(rho, radii[0]))
    return Seminorm(value, rho, center, lam, divergent)


def campanato_seminorm(u, spacing, lam: float, extents=None, radii=None) -> Seminorm:
    """Squared Campanato seminorm of a cell-sampled scalar or vector field.

    Parameters
    ----------
    u : array
        ``(nx, ny, nz[, k])`` or flat ``(n_cells[, k])`` in x-fastest order;
        ``extents`` is then required to recover the lattice.
    spacing : sequence of 3 floats
    lam : float
        Exponent in (0, 6]; values above 5 are accepted so that divergence can
        be observed and flagged.
    """
    spacing = np.asarray(spacing, dtype=float)
    cells = _cells(u, spacing, extents)
    arr = _as_components(u, cells)
    ext = np.asarray(cells) * spacing
    return _scan(arr, spacing, ext, lam, True, radii)


def morrey_seminorm(u, spacing, lam: float, extents=None, radii=None) -> Seminorm:
    """Same as :func:`campanato_seminorm` without subtracting the ball mean."""
    spacing = np.asarray(spacing, dtype=float)
    cells = _cells(u, spacing, extents)
    arr = _as_components(u, cells)
    ext = np.asarray(cells) * spacing
    return _scan(arr, spacing, ext, lam, False, radii)


def _cells(u, spacing, extents):
    u = np.asarray(u)
    if extents is not None:
        return tuple(int(round(e / h)) for e, h in zip(extents, spacing))
    if u.ndim >= 3:
        return u.shape[:3]
    raise ValueError("flat fields need extents")


def holder_seminorm(points, values, alpha: float, shape=None, n_pairs: int = N_PAIRS,
                    seed: int = 0) -> float:
    """max |u(x) - u(y)| / |x - y|^alpha over random pairs and lattice neighbours.

    ``points`` (n, 3) and ``values`` (n,) or (n, k). If ``shape`` is given the
    points form a lattice in x-fastest order and all axis-neighbour pairs are
    added to the random sample.
    """
    points = np.asarray(points, dtype=float)
    values = np.asarray(values, dtype=float).reshape(len(points), -1)
    n = len(points)
    if n < 2:
        return 0.0
    rng = np.random.default_rng(seed)
    i = rng.integers(0, n, n_pairs)
    j = rng.integers(0, n, n_pairs)
    pairs = [(i, j)]
    if shape is not None:
        idx = np.arange(n).reshape(shape, order="F")
        for axis in range(3):
            if shape[axis] > 1:
                a = np.take(idx, np.arange(shape[axis] - 1), axis=axis).ravel()
                b = np.take(idx, np.arange(1, shape[axis]), axis=axis).ravel()
                pairs.append((a, b))
    best = 0.0
    for a, b in pairs:
        keep = a != b
        a, b = a[keep], b[keep]
        if a.size == 0:
            continue
        d = np.linalg.norm(points[a] - points[b], axis=1)
        du = np.linalg.norm(values[a] - values[b], axis=1)
        best = max(best, float(np.max(du / d ** alpha)))
    return best


def holder_norm(points, values, alpha: float, shape=None, n_pairs: int = N_PAIRS, seed: int = 0) -> float:
    """sup |u| + Hoelder seminorm."""
    values = np.asarray(values, dtype=float).reshape(len(points), -1)
    sup = float(np.linalg.norm(values, axis=1).max()) if len(values) else 0.0
    return sup + holder_seminorm(points, values, alpha, shape, n_pairs, seed)

import numpy as np
import pytest

from eddycurrent.eigenbase import magnetic_eigenbasis
from eddycurrent.fields import interpolate_edges
from eddycurrent.grid import GridSpec, build_complex
from eddycurrent.manufactured import CASES, convergence_table, get_case, run_case

from conftest import make_forms


@pytest.mark.parametrize("name", sorted(CASES))
def test_fields_have_zero_tangential_trace(name):
    cx = build_complex(GridSpec.cube(4))
    H = interpolate_edges(cx, get_case(name).H, 0.05)
    assert np.abs(H[cx.boundary_edges]).max() < 1e-12


def test_cases_satisfy_the_pde_pointwise():
    # check curl curl F = kappa F by finite differences at a random point
    rng = np.random.default_rng(0)
    X = rng.random((5, 3)) * 0.8 + 0.1
    for case in CASES.values():
        for term in case.terms:
            eps = 1e-4
            # curl of the supplied curl, by central differences
            def d(i, j):
                e = np.zeros(3)
                e[j] = eps
                return (term.curl(X + e)[:, i] - term.curl(X - e)[:, i]) / (2 * eps)
            cc = np.stack([d(2, 1) - d(1, 2), d(0, 2) - d(2, 0), d(1, 0) - d(0, 1)], 1)
            assert np.allclose(cc, term.kappa * term.field(X), atol=1e-5)


def test_unknown_case():
    with pytest.raises(KeyError):
        get_case("three-mode")


def test_stationary_case_is_reproduced():
    run = run_case("stationary", 4)
    h = run.trajectory.h
    assert np.abs(h - h[0]).max() < 1e-10 * np.abs(h[0]).max()
    assert np.abs(run.trajectory.e).max() < 1e-10


def test_single_mode_convergence():
    rows = convergence_table("single-cavity-mode", (4, 8))
    assert rows[1]["rate_H"] >= 0.9
    assert rows[1]["L2_error_H"] < rows[0]["L2_error_H"]
    assert np.isnan(rows[0]["rate_H"])


def test_temporal_order_midpoint():
    forms = make_forms(4)
    basis = magnetic_eigenbasis(forms, 3)
    # compare against a very fine step to isolate the time error at fixed n
    errs = []
    ref = run_case("single-cavity-mode", 4, dt=0.1 / 640, basis=basis).trajectory.h[-1]
    for dt in (0.1 / 10, 0.1 / 20, 0.1 / 40):
        errs.append(np.linalg.norm(run_case("single-cavity-mode", 4, dt=dt, basis=basis).trajectory.h[-1] - ref))
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(rates >= 1.9)

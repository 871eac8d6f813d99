import numpy as np
import pytest

from eddycurrent.analysis import (RegularityReport, dual_norm, energy_identity_residual,
                                  holder_report, parabolic_residual, strong_constant,
                                  verify_apriori, weak_constant)
from eddycurrent.eigenbase import magnetic_eigenbasis
from eddycurrent.galerkin import SourceSpec, solve

from oracles import dense_dual_norm


def _sources(forms, basis, rng, T=0.1, nt=21, smooth=True):
    cx = forms.complex
    times = np.linspace(0.0, T, nt)
    je = rng.standard_normal(cx.n_faces)
    jm = basis.psis @ rng.standard_normal(basis.m)
    f = np.cos(3 * times) if smooth else np.ones(nt)
    return SourceSpec(times, np.outer(f, je), np.outer(np.sin(2 * times), jm),
                      basis.psis @ rng.standard_normal(basis.m))


@pytest.fixture(scope="module")
def layered(forms4_two_layer_sigma):
    return forms4_two_layer_sigma, magnetic_eigenbasis(forms4_two_layer_sigma, 8)


def test_midpoint_energy_identity_is_exact(layered, rng):
    f, b = layered
    traj = solve(f, b, _sources(f, b, rng))
    scale = traj.ledger.initial_energy + np.abs(traj.ledger.JE_E).max() * traj.times[-1]
    assert energy_identity_residual(traj) < 1e-12 * scale


def test_euler_energy_defect_is_first_order(forms4, basis4):
    res = []
    for nt in (21, 41, 81):
        src = SourceSpec.zero(forms4, np.linspace(0, 0.1, nt), basis4.psis @ np.ones(basis4.m))
        res.append(energy_identity_residual(solve(forms4, basis4, src, scheme="implicit-euler")))
    rates = np.log2(np.array(res[:-1]) / np.array(res[1:]))
    assert np.all(rates >= 0.9)


def test_ledger_columns(forms4, basis4, rng):
    traj = solve(forms4, basis4, _sources(forms4, basis4, rng))
    led = traj.ledger
    assert list(led.columns()) == ["H_norm2_mu", "sigmaEE", "JM_H", "JE_E", "dtH_norm2_mu", "dtH_dual"]
    assert led.H_norm2_mu[0] == pytest.approx(forms4.norm_mu(traj.H(0)) ** 2)
    assert np.all(led.dtH_dual ** 2 <= led.dtH_norm2_mu * (1 + 1e-12))


def test_apriori_zero_data(forms4, basis4):
    traj = solve(forms4, basis4, SourceSpec.zero(forms4, np.linspace(0, 0.1, 11)))
    rep = verify_apriori(traj, 1.0)
    assert rep.passed
    assert rep.weak.ratio == 0.0 and rep.strong.ratio == 0.0


def test_apriori_holds_and_is_scale_invariant(layered, rng):
    f, b = layered
    src = _sources(f, b, rng)
    r1 = verify_apriori(solve(f, b, src), 10.0)
    r2 = verify_apriori(solve(f, b, src.scaled(7.0)), 10.0)
    assert r1.passed and r2.passed
    assert r1.weak.ratio == pytest.approx(r2.weak.ratio, rel=1e-10)
    assert r1.strong.ratio == pytest.approx(r2.strong.ratio, rel=1e-10)
    assert r1.weak.constant_used == pytest.approx(weak_constant(10.0, 0.1))
    assert "Lambda" in r1.summary()


def test_apriori_rejects_small_lambda(forms4, basis4):
    traj = solve(forms4, basis4, SourceSpec.zero(forms4, np.linspace(0, 0.1, 3)))
    with pytest.raises(ValueError):
        verify_apriori(traj, 0.5)


def test_constants_grow_with_lambda():
    assert weak_constant(1.0, 0.0) == 2.0
    assert strong_constant(1.0, 0.0) == pytest.approx(2 * (2 + 1 + 1 + 1) + 1)
    assert strong_constant(2.0, 0.1) > strong_constant(1.5, 0.1)


def test_dual_norm_of_modes(basis4):
    vals = dual_norm(basis4.forms, basis4.psis)
    assert np.allclose(vals, 1 / np.sqrt(1 + basis4.lambdas), rtol=1e-10)


def test_dual_norm_against_dense(basis4_full, rng):
    f = basis4_full.forms
    F = basis4_full.psis @ rng.standard_normal(basis4_full.m)
    assert dual_norm(f, F) == pytest.approx(dense_dual_norm(f, F), rel=1e-10)
    assert dual_norm(f, np.zeros(f.complex.n_edges)) == 0.0


def test_parabolic_residual(forms4, basis4, rng):
    traj = solve(forms4, basis4, _sources(forms4, basis4, rng))
    assert parabolic_residual(traj).max() < 1e-12
    assert parabolic_residual(traj, tests="edges").max() > 1e-6   # truncation is visible
    with pytest.raises(ValueError):
        parabolic_residual(traj, tests="nodes")


def test_holder_report_shape(forms4, basis4, rng):
    traj = solve(forms4, basis4, _sources(forms4, basis4, rng, nt=5))
    rep = holder_report(traj, stride=2)
    assert isinstance(rep, RegularityReport)
    rows = list(rep.rows())
    assert len(rows) == 3 and len(rows[0]) == len(RegularityReport.COLUMNS)
    assert rep.lam == 4.0
    assert np.all(rep.rhs > 0) and np.all(np.isfinite(rep.constant))
    with pytest.raises(ValueError):
        holder_report(traj, alpha=0.9)

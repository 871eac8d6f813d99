import numpy as np
import pytest

from eddycurrent.eigenbase import (expand, harmonic_dimension, harmonic_space,
                                   magnetic_eigenbasis, reconstruct)
from eddycurrent.helmholtz import divergence_residual

from conftest import make_forms
from oracles import PI2, box_cavity_eigenvalues, dense_divfree_spectrum


def test_matches_dense_oracle(basis4_full, forms4):
    dense = dense_divfree_spectrum(forms4)
    assert len(dense) == basis4_full.m
    assert np.allclose(basis4_full.lambdas, dense, rtol=1e-8, atol=1e-8)


def test_leading_clusters_match_cavity_multiplicities(basis8):
    exact = box_cavity_eigenvalues(6)
    assert np.allclose(basis8.lambdas / PI2, exact / PI2, rtol=0.05)
    # the triple 2 pi^2 cluster stays triple on the discrete cube
    l = basis8.lambdas
    assert abs(l[2] - l[0]) < 1e-6 * l[0]
    assert l[3] - l[2] > 0.1 * l[0]


def test_orthonormal_in_mu(basis4, forms4_two_layer_mu):
    assert np.abs(basis4.gram() - np.eye(basis4.m)).max() < 1e-8
    b = magnetic_eigenbasis(forms4_two_layer_mu, 5)
    assert np.abs(b.gram() - np.eye(5)).max() < 1e-8
    assert np.abs(b.curl_gram() - np.diag(b.lambdas)).max() < 1e-8 * b.lambdas.max()


def test_modes_vanish_on_boundary_and_are_divergence_free(basis4):
    cx = basis4.forms.complex
    assert not basis4.psis[cx.boundary_edges].any()
    for j in range(basis4.m):
        assert divergence_residual(basis4.forms, basis4.psis[:, j]) < 1e-8


def test_ascending_and_taus(basis4):
    assert np.all(np.diff(basis4.lambdas) >= -1e-10)
    assert np.allclose(basis4.taus, 1 / (1 + basis4.lambdas))
    assert basis4.residuals.max() <= 1e-9


def test_seed_independent_spectrum(forms4):
    a = magnetic_eigenbasis(forms4, 4, seed=0)
    b = magnetic_eigenbasis(forms4, 4, seed=7)
    assert np.allclose(a.lambdas, b.lambdas, rtol=1e-9)
    # the first (triple) cluster is canonicalized, so its fields agree as well;
    # mode 4 opens the next cluster and is not determined by its eigenvalue
    assert np.abs(a.psis[:, :3] - b.psis[:, :3]).max() < 1e-6


def test_harmonic_space_of_cube_is_trivial(basis4):
    assert harmonic_dimension(basis4) == 0
    assert harmonic_space(basis4).basis.shape == (basis4.forms.complex.n_edges, 0)


def test_oversized_harmonic_tolerance_warns(basis4):
    with pytest.warns(UserWarning):
        dim = harmonic_dimension(basis4, harmonic_tol=1.1 * basis4.lambdas[0])
    assert dim == 3


def test_expand_examples(basis4):
    assert np.allclose(expand(basis4, basis4.psis[:, 2]), np.eye(basis4.m)[2], atol=1e-10)
    assert not expand(basis4, np.zeros(basis4.forms.complex.n_edges)).any()


def test_full_basis_reconstructs_divergence_free_fields(basis4_full, rng):
    c = rng.standard_normal(basis4_full.m)
    F = reconstruct(basis4_full, c)
    assert np.allclose(expand(basis4_full, F), c, atol=1e-8)
    assert np.allclose(reconstruct(basis4_full, expand(basis4_full, F)), F, atol=1e-8)


def test_bessel_inequality(basis4, rng):
    f = basis4.forms
    F = rng.standard_normal(f.complex.n_edges)
    c = expand(basis4, F)
    assert c @ c <= f.norm_mu(F) ** 2


def test_two_layer_mu_bracketed(forms4_two_layer_mu):
    # Rayleigh quotients change by at most the mu contrast in each direction
    lam = magnetic_eigenbasis(forms4_two_layer_mu, 1).lambdas[0]
    lam1 = magnetic_eigenbasis(make_forms(4, mu=1.0), 1).lambdas[0]
    assert lam1 / 2 <= lam <= 2 * lam1


def test_constant_mu_scale_invariant():
    a = magnetic_eigenbasis(make_forms(4, mu=1.0), 3).lambdas
    b = magnetic_eigenbasis(make_forms(4, mu=5.0), 3).lambdas
    assert np.allclose(a, b, rtol=1e-9)


def test_first_eigenvalue_converges_monotonically():
    vals = [magnetic_eigenbasis(make_forms(n), 1).lambdas[0] for n in (4, 8, 16)]
    err = [v - 2 * PI2 for v in vals]
    assert err[0] > err[1] > err[2] > 0
    assert abs(err[2]) / (2 * PI2) < 0.02


def test_too_many_modes_rejected(forms4):
    with pytest.raises(ValueError):
        magnetic_eigenbasis(forms4, 10_000)
    with pytest.raises(ValueError):
        magnetic_eigenbasis(forms4, 0)


def test_truncate(basis4):
    t = basis4.truncate(3)
    assert t.m == 3 and np.array_equal(t.lambdas, basis4.lambdas[:3])

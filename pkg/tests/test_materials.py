import warnings

import numpy as np
import pytest

from eddycurrent.errors import MaterialError
from eddycurrent.grid import GridSpec
from eddycurrent.materials import (MaterialModel, invert_sym3, layer_mu, lipschitz_mu,
                                   minimal_lambda, two_layer, validate)

G4 = GridSpec.cube(4)


def test_identity_model_is_feasible():
    r = validate(MaterialModel.uniform(G4, 1.0, 1.0, 1.0))
    assert r.feasible
    assert r.lipschitz_mu_estimate == 0.0


def test_zero_eigenvalue_is_infeasible_for_any_lambda():
    sigma = np.diag([1.0, 1.0, 0.0])
    for lam in (1.0, 10.0, 1e6):
        assert not validate(MaterialModel(G4, 1.0, sigma, lam)).feasible


def test_two_layer_minimal_lambda():
    m = two_layer(G4, 10 * np.eye(3), np.eye(3), 0.5)
    assert minimal_lambda(m) == pytest.approx(10.0)
    assert validate(m.with_lambda(10.0)).feasible
    assert not validate(m.with_lambda(10.0 - 1e-9)).feasible


def test_equal_layers_give_constant_model():
    m = two_layer(G4, 2 * np.eye(3), 2 * np.eye(3), 0.5)
    assert np.all(m.sigma == 2 * np.eye(3))


def test_interface_splits_cells_in_half():
    m = two_layer(G4, 10 * np.eye(3), np.eye(3), 0.5)
    top = np.all(m.sigma == 10 * np.eye(3), axis=(1, 2))
    assert top.sum() == G4.n_cells // 2


def test_anisotropic_top_layer_eig_range():
    m = two_layer(G4, np.diag([1.0, 2.0, 4.0]), np.eye(3), 0.5)
    top = np.flatnonzero(np.all(m.sigma == np.diag([1.0, 2.0, 4.0]), axis=(1, 2)))
    r = validate(m, cells=top)
    assert r.sigma_eig_range == pytest.approx((1.0, 4.0))


def test_non_symmetric_sigma_rejected():
    s = np.eye(3)
    s[0, 1] = 0.5
    with pytest.raises(MaterialError):
        validate(MaterialModel(G4, 1.0, s, 2.0))


def test_non_spd_layer_rejected():
    with pytest.raises(MaterialError):
        two_layer(G4, -np.eye(3), np.eye(3), 0.5)


def test_interface_outside_box_rejected():
    with pytest.raises(MaterialError):
        two_layer(G4, np.eye(3), np.eye(3), 1.5)


def test_invert_sym3_matches_numpy(rng):
    A = rng.standard_normal((20, 3, 3))
    S = A @ A.transpose(0, 2, 1) + 0.5 * np.eye(3)
    assert np.allclose(invert_sym3(S), np.linalg.inv(S))


def test_invert_sym3_pivot_tolerance():
    with pytest.raises(MaterialError):
        invert_sym3(np.zeros((1, 3, 3)))


def test_mu_lipschitz_warning():
    mu = layer_mu(G4, 1.0, 3.0, 0.5)      # jump 2 over h = 0.25 -> 8
    m = MaterialModel.uniform(G4, mu, 1.0, 3.0)
    assert lipschitz_mu(m) == pytest.approx(8.0)
    with pytest.warns(UserWarning):
        r = validate(m)
    assert r.feasible and not r.lipschitz_ok


def test_uniform_defaults_to_minimal_lambda():
    m = MaterialModel.uniform(G4, 0.5, np.diag([1.0, 3.0, 2.0]))
    assert m.lambda_bound == pytest.approx(3.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert validate(m).feasible


def test_arrays_are_read_only():
    m = MaterialModel.uniform(G4)
    with pytest.raises(ValueError):
        m.mu[0] = 2.0

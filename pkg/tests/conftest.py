import numpy as np
import pytest

from eddycurrent.assembly import assemble_forms
from eddycurrent.eigenbase import magnetic_eigenbasis
from eddycurrent.grid import GridSpec, build_complex
from eddycurrent.materials import MaterialModel, layer_mu, two_layer


def make_forms(n, mu=1.0, sigma=1.0, lambda_bound=None):
    cx = build_complex(GridSpec.cube(n))
    return assemble_forms(cx, MaterialModel.uniform(cx.spec, mu, sigma, lambda_bound))


@pytest.fixture(scope="session")
def forms4():
    return make_forms(4)


@pytest.fixture(scope="session")
def forms8():
    return make_forms(8)


@pytest.fixture(scope="session")
def basis4_full(forms4):
    cx = forms4.complex
    dim = len(cx.interior_edges) - len(cx.interior_nodes)
    return magnetic_eigenbasis(forms4, dim)


@pytest.fixture(scope="session")
def basis4(forms4):
    return magnetic_eigenbasis(forms4, 12)


@pytest.fixture(scope="session")
def basis8(forms8):
    return magnetic_eigenbasis(forms8, 6)


@pytest.fixture(scope="session")
def forms4_two_layer_mu():
    cx = build_complex(GridSpec.cube(4))
    mu = layer_mu(cx.spec, 1.0, 2.0, 0.5)
    return assemble_forms(cx, MaterialModel.uniform(cx.spec, mu, 1.0))


@pytest.fixture(scope="session")
def forms4_two_layer_sigma():
    cx = build_complex(GridSpec.cube(4))
    return assemble_forms(cx, two_layer(cx.spec, 10.0, 1.0, 0.5))


@pytest.fixture
def rng():
    return np.random.default_rng(42)


# acceptance criteria report one line each; collected here and echoed at the end
ACCEPTANCE_LOG = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LOG:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LOG, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)

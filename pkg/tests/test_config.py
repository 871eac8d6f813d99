import pytest
from hypothesis import given, settings, strategies as st

from eddycurrent import config as cfg

SAMPLE = """\
# two-layer conductor
grid.n = 6
sigma.layers[0].z = 0.0, 0.5
sigma.layers[0].tensor = 10, 10, 10
sigma.layers[1].z = 0.5, 1.0
sigma.layers[1].tensor = 1, 2, 4
material.lambda = 10
time.T = 0.1
time.dt = 0.01          # ten steps
sources.kind = constant
sources.je = 1, 0, 0
"""


def test_parse_sample():
    sc = cfg.parse(SAMPLE).validate()
    assert sc.cells == (6, 6, 6)
    assert sc["material.lambda"] == 10.0
    assert sc["sources.je"] == (1.0, 0.0, 0.0)
    assert sc.n_steps == 10
    layers = sc.layers("sigma")
    assert [l["z"] for l in layers] == [(0.0, 0.5), (0.5, 1.0)]
    # unset keys fall back to documented defaults
    assert sc["run.seed"] == 42 and sc["time.scheme"] == "implicit-midpoint"


def test_round_trip():
    sc = cfg.parse(SAMPLE)
    text = cfg.serialize(sc)
    assert cfg.parse(text) == sc
    assert cfg.serialize(cfg.parse(text)) == text


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 64), st.floats(1e-6, 1e6, allow_nan=False), st.integers(0, 2 ** 63 - 1),
       st.sampled_from(["implicit-midpoint", "implicit-euler"]),
       st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=3, max_size=3))
def test_round_trip_property(n, lam, seed, scheme, je):
    sc = cfg.Scenario({"grid.n": n, "material.lambda": lam, "run.seed": seed,
                       "time.scheme": scheme, "sources.je": tuple(je)})
    assert cfg.parse(cfg.serialize(sc)) == sc


@pytest.mark.parametrize("text,msg", [
    ("grid.size = 4", "unknown key"),
    ("grid.n = 4\ngrid.n = 5", "duplicate"),
    ("grid.n = four", "cannot read"),
    ("grid.n", "expected"),
    ("grid.n =", "empty value"),
    ("sigma.layers[0].color = 1", "unknown key"),
])
def test_parse_errors(text, msg):
    with pytest.raises(cfg.ConfigError, match=msg):
        cfg.parse(text)


@pytest.mark.parametrize("text", [
    "time.scheme = rk4",
    "time.dt = 0.2\ntime.T = 0.1",
    "time.dt = 0.03\ntime.T = 0.1",
    "eigen.modes = 0",
    "grid.cells = 2, 2",
    "mu.file = does-not-exist.npy",
    "sources.kind = table",
    "sigma.layers[0].z = 0, 1",
])
def test_validation_errors(text):
    with pytest.raises(cfg.ConfigError):
        cfg.parse(text).validate()


def test_relative_paths_use_file_directory(tmp_path):
    (tmp_path / "mu.npy").write_bytes(b"")
    p = tmp_path / "scenario.cfg"
    p.write_text("mu.file = mu.npy\n")
    sc = cfg.load(p).validate()
    assert sc.path("mu.file") == tmp_path / "mu.npy"
    with pytest.raises(cfg.ConfigError):
        cfg.load(tmp_path / "missing.cfg")

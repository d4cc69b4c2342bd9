import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import brentq

from exactctl.errors import ConfigInvalid
from exactctl.serialize import write_grid_function_csv
from exactctl.space import GridFunction, SeqVector, l2_norm, midpoints, p_inverse
from exactctl.transport import (
    F_BOUND,
    TransportConfig,
    TransportNonlinearity,
    apply_f,
    build_transport_model,
    dissipativity_probe,
    lipschitz_ladder,
    phi,
    rho,
)

F = TransportNonlinearity()


def test_phi_branches():
    assert np.array_equal(phi([-1.0, 0.0, 0.25, 1.0, 4.0]), [0.0, 0.0, -0.5, -1.0, -1.0])


def test_phi_monotone_and_bounded():
    a = np.linspace(-3, 3, 10_001)
    p = phi(a)
    assert np.all(np.diff(p) <= 0) and np.all(np.abs(p) <= 1)


def test_rho_weights():
    assert np.allclose(rho(np.full(4, 2.0)), [-1, -1 / 2, -1 / 3, -1 / 4])


def test_apply_f_examples():
    assert np.all(apply_f(GridFunction.zeros(16)).values == 0)
    n = 16
    x = p_inverse(SeqVector(np.r_[0.25, np.zeros(n - 1)]))
    expected = p_inverse(SeqVector(np.r_[-0.5, np.zeros(n - 1)]))
    assert np.allclose(apply_f(x).values, expected.values, atol=1e-15)
    assert np.allclose(F(x.values), expected.values, atol=1e-15)


def test_uniform_bound():
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(8, 400))
        x = rng.standard_normal(n) * rng.choice([0.1, 1, 10, 1000]) * np.sqrt(n)
        worst = max(worst, l2_norm(F(x)))
    assert worst <= 1.2826
    assert l2_norm(F(np.full(10_000, 1e6))) < F_BOUND < 1.2826


def test_dissipative_small_sample():
    assert dissipativity_probe(n=32, count=500, seed=1).estimate <= 1e-12


def test_lipschitz_ladder_values():
    rows = lipschitz_ladder(10_000)
    assert [r["m"] for r in rows] == [4, 16, 64, 256, 1024, 4096, 10_000]
    for r in rows:
        assert abs(r["ratio"] - np.sqrt(r["m"])) <= 1e-9
    assert lipschitz_ladder(4)[-1]["m"] == 4
    assert [r["m"] for r in lipschitz_ladder(3)] == [3]


@given(st.floats(-50, 50, allow_nan=False), st.floats(0, 2, allow_nan=False), st.integers(1, 30))
def test_resolve_solves_cell_equation(b, c, n):
    z = F.resolve(np.full(n, b), c)
    residual = z - c * F(z) - b
    assert np.max(np.abs(residual)) <= 1e-10 * (1 + abs(b))
    # cross-check the first cell with a bracketing root finder
    s = np.sqrt(1.0 / n)
    g = lambda a: a - c * phi(a) - b * s  # noqa: E731
    root = brentq(g, -abs(b * s) - c - 1, abs(b * s) + c + 1, xtol=1e-14)
    assert z[0] * s == pytest.approx(root, abs=1e-10)


# --------------------------------------------------------------------------- config


def test_default_model():
    model = build_transport_model(TransportConfig())
    assert model.grid.dt == 1 / 64 and model.grid.nt == 80
    assert np.array_equal(model.B, np.ones(64))
    assert np.allclose(model.target.values, np.sin(np.pi * midpoints(64)))
    assert model.semigroup.is_shift


def test_negative_m_rejected():
    table = [1.0] * 64
    table[3] = -0.5
    with pytest.raises(ConfigInvalid) as info:
        TransportConfig.from_dict({"m_profile": {"table": table}})
    assert "m_profile" in info.value.payload["fields"]


def test_field_level_errors():
    with pytest.raises(ConfigInvalid) as info:
        TransportConfig.from_dict({"n": 4, "T": 1.3, "bogus": 1, "steering": {"relaxation": 2}})
    fields = info.value.payload["fields"]
    assert {"n", "bogus", "steering.relaxation"} <= set(fields)


def test_misaligned_horizon():
    with pytest.raises(ConfigInvalid) as info:
        TransportConfig.from_dict({"n": 64, "T": 1.3})
    assert "T" in info.value.payload["fields"]


def test_gauss_target():
    cfg = TransportConfig.from_dict({"n": 32, "target": {"kind": "gauss", "center": 0.4, "width": 0.1}})
    xi = midpoints(32)
    assert np.allclose(cfg.target_values(), np.exp(-0.5 * ((xi - 0.4) / 0.1) ** 2))
    with pytest.raises(ConfigInvalid):
        TransportConfig.from_dict({"target": {"kind": "gauss", "center": 0.4}})


def test_csv_target_relative_to_config(tmp_path):
    values = np.cos(midpoints(16))
    write_grid_function_csv(tmp_path / "target.csv", values)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"n": 16, "T": 1.25, "target": {"kind": "csv", "path": "target.csv"}}))
    cfg = TransportConfig.load(path)
    assert np.array_equal(cfg.target_values(), values)


def test_csv_target_wrong_length(tmp_path):
    write_grid_function_csv(tmp_path / "t.csv", np.ones(10))
    with pytest.raises(ConfigInvalid):
        TransportConfig.from_dict({"n": 16, "target": {"kind": "csv", "path": "t.csv"}}, base_dir=tmp_path)


def test_load_errors(tmp_path):
    with pytest.raises(ConfigInvalid):
        TransportConfig.load(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigInvalid):
        TransportConfig.load(bad)

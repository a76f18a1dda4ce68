import json
import math

import numpy as np
import pytest

import dnflow


def lambda_1d(L, n):
    h = L / (n + 1)
    return 2.0 / h**2 * (1.0 - math.cos(math.pi * h / L))


def sine(grid):
    x = grid.coordinates()[:, 0]
    return dnflow.VectorField(grid, np.sin(math.pi * x / grid.length(0))[None, :])


def test_field_roundtrip():
    g = dnflow.Grid.rectangle(1.0, 2.0, 3, 4)
    a = np.arange(2 * g.node_count, dtype=float).reshape(2, -1)
    f = dnflow.VectorField(g, a)
    assert f.m == 2
    np.testing.assert_array_equal(f.to_numpy(), a)
    np.testing.assert_array_equal((2.0 * f).to_numpy(), 2 * a)


def test_heat_step_matches_dense_solve():
    g = dnflow.Grid.line(1.0, 20)
    h, tau = g.spacing(0), 0.01
    rng = np.random.default_rng(0)
    v0 = rng.uniform(-1, 1, g.node_count)
    r = dnflow.step(dnflow.VectorField(g, v0), dnflow.DissipationSpec.identity(1),
                    dnflow.EnergySpec.quadratic_frobenius(1, 1), dnflow.StepConfig(tau=tau, residual_tol=1e-13))
    n = g.node_count
    A = (np.diag(2 * np.ones(n)) - np.diag(np.ones(n - 1), 1) - np.diag(np.ones(n - 1), -1)) / h**2
    expect = np.linalg.solve(np.eye(n) + tau * A, v0)
    np.testing.assert_allclose(r.field.to_numpy()[0], expect, rtol=1e-11, atol=1e-13)


def test_evolve_and_diagnostics():
    g = dnflow.Grid.line(1.0, 15)
    p = 3.0
    traj = dnflow.evolve(sine(g), dnflow.DissipationSpec.ppower(1, p), dnflow.EnergySpec.ppower_norm(1, 1, p),
                         0.1, 10)
    assert traj.to_numpy().shape == (11, 1, 15)
    assert dnflow.energy_series(traj).passed
    assert dnflow.max_principle_check(traj).passed
    assert dnflow.rayleigh_series(traj, p).passed


def test_ground_state():
    g = dnflow.Grid.line(1.0, 20)
    lam = lambda_1d(1.0, 20)
    flow = dnflow.ground_state_via_flow(dnflow.builtin_initial("bump", {}, g), 2.0)
    direct = dnflow.direct_rayleigh_minimize(g, 2.0, 1, 3)
    assert flow.lambda_estimate == pytest.approx(lam, rel=1e-9)
    assert direct.lambda_estimate == pytest.approx(lam, rel=1e-9)
    assert dnflow.el_residual(direct.profile, direct.lambda_estimate, 2.0) < 1e-6


def test_errors_carry_kind():
    g = dnflow.Grid.line(1.0, 5)
    with pytest.raises(dnflow.Error) as info:
        dnflow.builtin_initial("gaussian", {}, g)
    assert info.value.kind == "UnknownDatum"
    with pytest.raises(dnflow.Error) as info:
        dnflow.max_principle_check(dnflow.evolve(dnflow.VectorField(g, 2), dnflow.DissipationSpec.identity(2),
                                                 dnflow.EnergySpec.quadratic_frobenius(2, 1), 0.1, 2))
    assert info.value.kind == "NotScalar"


def test_run_experiment(tmp_path):
    cfg = {
        "grid": {"dim": 1, "lengths": [1.0], "interior": [15]},
        "psi": {"kind": "ppower", "p": 2.0},
        "F": {"kind": "ppower", "p": 2.0},
        "run": {"T": 0.1, "N": 8},
        "initial": {"name": "sine_eigenvector"},
    }
    path = tmp_path / "c.json"
    path.write_text(json.dumps(cfg))
    assert dnflow.run_experiment("evolve", path, out_dir=tmp_path / "out", seed=1) == 0
    lines = (tmp_path / "out" / "series.csv").read_text().splitlines()
    assert lines[0].startswith("step,time,energy")
    assert len(lines) == 10
    cfg["psi"]["p"] = 0.5
    path.write_text(json.dumps(cfg))
    assert dnflow.run_experiment("evolve", path, out_dir=tmp_path / "bad") == 2
    err = json.loads((tmp_path / "bad" / "error.json").read_text())
    assert "psi.p" in err["message"]

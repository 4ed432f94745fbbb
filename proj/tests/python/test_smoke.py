import json
import math

import numpy as np
import pytest

import psr


def test_version_and_config():
    assert psr.__version__ == "0.1.0"
    cfg = json.loads(psr.default_config())
    assert cfg["mppi"]["samples"] == 1000
    assert cfg["mppi"]["w_collision"] == 500.0


def test_simulate_shapes_and_seed():
    u = np.tile([0.3, 0.0, 0.0], (50, 1))
    z, y = psr.simulate(u, seed=3)
    assert z.shape == (51, 18)
    assert y.shape == (50, 14)
    z2, y2 = psr.simulate(u, seed=3)
    np.testing.assert_array_equal(y, y2)
    assert z[-1, 0] > 0.1


def test_cv_rollout_closed_form():
    u = np.tile([0.0, 0.0, 1.0], (100, 1))
    q = psr.cv_rollout([0.0, 0.0, 0.0], u, 0.02)
    assert q.shape == (100, 3)
    assert q[-1, 2] == pytest.approx(2.0, abs=1e-12)
    assert abs(q[-1, 0]) < 1e-15


def test_bezier_endpoints():
    p = np.array([[0.0, 0.0, 0.0], [0.2, 0.1, 0.0], [0.4, -0.1, 0.3], [0.5, 0.0, 0.1]])
    np.testing.assert_allclose(psr.bezier_eval(p, 0.0), p[0], atol=1e-15)
    np.testing.assert_allclose(psr.bezier_eval(p, 1.0), p[-1], atol=1e-15)


def test_spectral_norm_matches_numpy():
    rng = np.random.default_rng(0)
    a = rng.normal(size=(7, 5))
    assert psr.spectral_norm(a) == pytest.approx(np.linalg.norm(a, 2), rel=1e-9)


def test_lipschitz_bound_holds():
    rng = np.random.default_rng(1)
    ws = [rng.normal(size=(8, 4)), rng.normal(size=(3, 8))]
    bs = [rng.normal(size=8), rng.normal(size=3)]
    bound = psr.lipschitz_upper_bound(ws, bs)

    def f(x):
        return ws[1] @ np.maximum(ws[0] @ x + bs[0], 0) + bs[1]

    for _ in range(200):
        a, b = rng.normal(size=4), rng.normal(size=4)
        assert np.linalg.norm(f(a) - f(b)) <= bound * np.linalg.norm(a - b) + 1e-9


def test_mppi_weights():
    w = psr.mppi_weights([0.0, math.log(3.0)], 1.0)
    assert w == pytest.approx([0.75, 0.25], abs=1e-12)
    with pytest.raises(RuntimeError):
        psr.mppi_weights([math.inf, math.inf], 1.0)


def test_occupancy_and_collision():
    pts = psr.fk_occupancy(np.array(psr.nominal_joints()))
    assert pts.shape == (3, 780)
    z = np.zeros(18)
    z[2] = 0.4
    z[6:] = psr.nominal_joints()
    assert psr.collision_cost(z, [], 0.05) == 0
    assert psr.collision_cost(z, [([-1, -1, -1], [1, 1, 1])], 0.05) == 780
    with pytest.raises(ValueError):
        psr.fk_occupancy(np.zeros(5))


def test_model_round_trip(tmp_path):
    m = psr.random_model(latent=8, hidden=[8], seed=2)
    u = np.tile([0.2, 0.0, 0.1], (10, 1))
    _, y = psr.simulate(u, seed=1)
    x = m.observe(y, u)
    assert x.shape == (8,)
    p = m.predict(x, u)
    assert p.shape == (10, 18)
    path = str(tmp_path / "m.psrm")
    m.save(path)
    back = psr.load_model(path)
    np.testing.assert_array_equal(back.predict(x, u), p)
    assert psr.contraction_factor(back) > 0
    with pytest.raises(OSError):
        psr.load_model(str(tmp_path / "missing.psrm"))


def test_plan_trial_cv_open_scene():
    r = psr.plan_trial("open", seed=1, samples=64, horizon=60)
    assert set(r) >= {"success", "collided", "timed_out", "time_to_track"}
    assert r["planning_cycles"] > 0
    assert not r["collided"]

import json
import math

import numpy as np
import pytest

import proxops


ORBIT = proxops.ChiefOrbit.circular()


def test_mean_motion():
    n = math.sqrt(3.986004418e14 / 6878137.0**3)
    assert ORBIT.mean_motion == pytest.approx(n, rel=1e-12)
    assert ORBIT.period() == pytest.approx(2 * math.pi / n)


def test_cwh_accel_example():
    s = proxops.RelativeState([1.0, 0.0, 0.0])
    a = proxops.cwh_accel(s, [0.0, 0.0, 0.0], ORBIT)
    assert a[0] == pytest.approx(3 * ORBIT.mean_motion**2)
    assert a[1] == 0.0


def test_propagate_matches_closed_form():
    s = proxops.RelativeState([120.0, -40.0, 30.0], [0.1, 0.2, -0.1])
    rk = proxops.propagate_cwh(s, [0.0, 0.0, 0.0], 500.0, 5000, ORBIT)
    cf = proxops.cwh_closed_form(s, 500.0, ORBIT.mean_motion)
    assert np.allclose(rk.pos, cf.pos, atol=1e-6)
    assert np.allclose(rk.vel, cf.vel, atol=1e-9)


def test_observation_and_reward():
    obs = proxops.observe(proxops.RelativeState([1100.0, -400.0, 7.0], [1, 2, 3]), [100.0, 100.0, 7.0])
    assert np.allclose(obs, [1.0, -0.5, 0.0, 1.0, 2.0, 3.0])
    assert proxops.reward([0, 0, 0], [0, 0, 0], [0, 0, 0], [0, 0, 0]) == pytest.approx(1e-3, abs=1e-15)
    act = proxops.baseline_act(np.zeros(6))
    assert np.all(act == 0.0)


def test_solve_qp_box():
    r = proxops.solve_qp(np.ones(3), np.array([2.0, 0.0, 0.0]),
                         np.array([[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]]), np.array([1.0, 1.0]))
    assert r["status"] == "optimal"
    assert np.allclose(r["x"], [1.0, 0.0, 0.0], atol=1e-12)
    assert r["kkt_residual"] < 1e-10


def test_rta_filter_far_apart_passes_through():
    states = [proxops.RelativeState([300.0, 0.0, 0.0]), proxops.RelativeState([0.0, -300.0, 0.0])]
    out = proxops.rta_filter(states, [[0.1, 0.0, 0.0], [0.0, 0.1, 0.0]], ORBIT)
    assert len(out) == 2
    assert np.allclose(out[0]["u_safe"], [0.1, 0.0, 0.0], atol=1e-6)
    assert not out[0]["intervened"]


def test_run_scenario():
    m = proxops.run_scenario("single")
    assert m["aggregate"]["targets_reached"] == 4
    assert m["aggregate"]["distance_traveled"] <= 1.25 * 2300
    assert m["trajectory_csv"].startswith("t,agent,rx,")
    rta = proxops.run_scenario("standoff", rta=True)
    assert rta["min_pair_distance"] >= 45.0
    with pytest.raises(proxops.ConfigError):
        proxops.run_scenario("nowhere")


def test_baseline_stats_is_deterministic():
    a = proxops.baseline_stats(4, 9)
    b = proxops.baseline_stats(4, 9)
    assert a == b
    assert a["trials"] == 4
    assert proxops.baseline_stats(0, 1)["trials"] == 0


def test_cli(tmp_path):
    code, out, err = proxops.cli(["baseline-stats", "--trials", "2", "--json"])
    assert code == 0
    assert json.loads(out)["trials"] == 2
    code, _, err = proxops.cli(["run", "--scenario", "nope", "--out", str(tmp_path / "x")])
    assert code == 2
    assert "unknown scenario" in err
    assert not (tmp_path / "x").exists()

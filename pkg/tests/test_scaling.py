from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tubelaunch import rotation
from tubelaunch.aero import static_stability
from tubelaunch.dynamics import ForceModel, RigidBodyState, Simulator
from tubelaunch.errors import ConfigError
from tubelaunch.launcher import simulate_tube_phase
from tubelaunch.scaling import ScaleMap, froude_number, scale_scenario, scale_trajectory, subscale_config
from tubelaunch.scenario import Scenario
from tubelaunch.vehicle import DeploymentState, hinge_open_time

S = Scenario()
LAM = 3.0


def test_froude_number_of_full_scale_flight():
    assert froude_number(12.0, 0.79) == pytest.approx(12.0 / math.sqrt(9.81 * 0.79), rel=1e-12)
    assert round(froude_number(12.0, 0.79), 2) == 4.31


def test_froude_rejects_bad_length():
    with pytest.raises(ConfigError):
        froude_number(1.0, 0.0)


def test_speed_map_values():
    m = ScaleMap(LAM)
    assert m.speed(4.5) == pytest.approx(7.79, abs=0.01)
    assert m.speed(10.0) == pytest.approx(17.32, abs=0.01)
    assert m.time_factor == m.velocity_factor == math.sqrt(3.0)
    assert m.mass_factor == 27.0


@settings(max_examples=100, deadline=None)
@given(st.floats(0.1, 10.0), st.floats(0.01, 50.0), st.floats(0.01, 5.0))
def test_froude_invariant_under_map(lam, v, length):
    m = ScaleMap(lam)
    fr = froude_number(v, length)
    assert froude_number(m.speed(v), length * lam) == pytest.approx(fr, rel=1e-12)
    assert m.inverse().speed(m.speed(v)) == pytest.approx(v, rel=1e-12)


def test_trajectory_round_trip():
    traj = [(0.1 * k, np.array([k, 2.0 * k, 3.0]), np.array([1.0, -k, 0.5])) for k in range(5)]
    m = ScaleMap(LAM)
    back = scale_trajectory(scale_trajectory(traj, m), m.inverse())
    for (t0, p0, v0), (t1, p1, v1) in zip(traj, back):
        assert t1 == pytest.approx(t0) and np.allclose(p1, p0) and np.allclose(v1, v0)


def test_subscale_geometry_and_mass():
    cfg = subscale_config(S.vehicle, S.aero, LAM)
    assert cfg.vehicle.folded_diameter == pytest.approx(0.05, rel=1e-12)
    assert cfg.vehicle.total_mass == pytest.approx(3.3 / 27.0, rel=1e-12)
    assert round(cfg.vehicle.total_mass * 1000) == 122
    # a built model is heavier than the cube law: pin it
    pinned = subscale_config(S.vehicle, S.aero, LAM, model_mass=0.150)
    assert pinned.vehicle.total_mass == pytest.approx(0.150, rel=1e-12)


def test_subscale_margin():
    cfg = subscale_config(S.vehicle, S.aero, LAM)
    full = static_stability(S.aero, S.vehicle, DeploymentState.deployed(S.vehicle))
    sub = static_stability(cfg.aero, cfg.vehicle, DeploymentState.deployed(cfg.vehicle))
    assert abs(sub.static_margin - 0.05) <= 0.01
    assert sub.static_margin == pytest.approx(full.static_margin / LAM, rel=1e-9)


def test_hinge_time_follows_froude():
    cfg = subscale_config(S.vehicle, S.aero, LAM)
    assert hinge_open_time(cfg.vehicle) == pytest.approx(hinge_open_time(S.vehicle) / math.sqrt(LAM), rel=1e-6)


@pytest.mark.parametrize("model_mass", [None, 0.150])
def test_launcher_exit_speed_follows_froude(model_mass):
    cfg = subscale_config(S.vehicle, S.aero, LAM, S.launcher, model_mass=model_mass)
    full = simulate_tube_phase(S.launcher, S.vehicle)
    sub = simulate_tube_phase(cfg.launcher, cfg.vehicle)
    assert sub.exit_speed == pytest.approx(full.exit_speed / math.sqrt(LAM), rel=1e-9)
    assert sub.peak_acceleration == pytest.approx(full.peak_acceleration, rel=1e-9)


def test_invalid_scale():
    with pytest.raises(ConfigError):
        subscale_config(S.vehicle, S.aero, 0.0)
    with pytest.raises(ConfigError):
        ScaleMap(-1.0)


def _fly(vehicle, aero, speed, rate, wind, dt, n):
    q0 = rotation.from_axis_angle([1.0, 0.0, 0.0], math.radians(5.0))
    state = RigidBodyState([0.0, 0.0, 0.0], [0.0, 0.0, speed], q0, rate)
    model = ForceModel(vehicle, aero, wind=wind)
    sim = Simulator(model, state, DeploymentState.folded(vehicle), dt=dt, ground_height=-1e9)
    out = []
    for _ in range(n):
        sim.advance(1)
        s = sim.state
        out.append((sim.time, s.position.copy(), s.velocity.copy(), s.attitude.copy()))
    return out


def _compare(aero_full, wind_full):
    cfg = subscale_config(S.vehicle, aero_full, LAM)
    k = math.sqrt(LAM)
    rate = np.array([0.3, -0.2, 0.1])
    full = _fly(S.vehicle, aero_full, 12.0, rate, np.asarray(wind_full), 1e-3, 1200)
    # the model step is the full step divided by the time factor so samples align
    sub = _fly(cfg.vehicle, cfg.aero, 12.0 / k, rate * k, np.asarray(wind_full) / k, 1e-3 / k, 1200)
    mapped = scale_trajectory([(t, p, v) for t, p, v, _ in sub], ScaleMap(LAM))
    err_p = max(np.linalg.norm(a[1] - b[1]) for a, b in zip(full, mapped))
    err_v = max(np.linalg.norm(a[2] - b[2]) for a, b in zip(full, mapped))
    err_q = max(np.linalg.norm(a[3] - b[3]) for a, b in zip(full, sub))
    apo_full = max(p[2] for _, p, _, _ in full)
    apo_sub = max(p[2] for _, p, _ in mapped)
    return err_p, err_v, err_q, apo_full, apo_sub


def test_scaled_vacuum_flight_maps_exactly():
    err_p, err_v, err_q, apo_f, apo_s = _compare(S.aero.with_(air_density=0.0), [0.0, 0.0, 0.0])
    assert err_p < 1e-6 and err_v < 1e-6 and err_q < 1e-6
    assert apo_s == pytest.approx(apo_f, rel=1e-6)


def test_scaled_flight_with_air_and_wind():
    # every aerodynamic coefficient is rescaled, so the map stays exact in air
    err_p, err_v, err_q, apo_f, apo_s = _compare(S.aero, [6.0, 0.0, 0.0])
    assert abs(apo_s - apo_f) <= 0.05 * apo_f
    assert err_p < 1e-6 and err_v < 1e-6 and err_q < 1e-6


def test_scale_scenario_fields():
    sub = scale_scenario(S, LAM)
    k = math.sqrt(LAM)
    assert sub.sim.duration == pytest.approx(S.sim.duration / k)
    assert sub.sim.dt == S.sim.dt
    assert sub.sensors == S.sensors and sub.autonomy == S.autonomy
    assert sub.name.endswith("-1:3")
    assert sub.vehicle.total_mass == pytest.approx(S.vehicle.total_mass / 27.0)

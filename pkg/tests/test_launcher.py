from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from tubelaunch.constants import BAR, GRAVITY
from tubelaunch.errors import ConfigError, LaunchFailure
from tubelaunch.launcher import (
    LauncherConfig,
    adiabatic_energy,
    apogee_bound,
    calibrate_efficiency,
    potential_energy,
    simulate_tube_phase,
    stroke_gas_work,
    tube_kinematics,
)
from tubelaunch.vehicle import VehicleConfig

L = LauncherConfig()
V = VehicleConfig()


def adiabatic_oracle(p1, v1, p0, gamma):
    """Net work by quadrature: integral of (p(V) - p0) dV until p(V) = p0."""
    v2 = v1 * (p1 / p0) ** (1.0 / gamma)
    val, _ = quad(lambda v: p1 * (v1 / v) ** gamma - p0, v1, v2, epsabs=0.0, epsrel=1e-12, limit=200)
    return val


def test_adiabatic_energy_against_quadrature():
    cfg = L.with_(chamber_pressure=6.9e5, chamber_volume=2e-3, gas_gamma=1.3)
    exact = adiabatic_oracle(6.9e5, 2e-3, cfg.ambient_pressure, 1.3)
    assert math.isclose(adiabatic_energy(cfg), exact, rel_tol=1e-6)


@settings(max_examples=30, deadline=None)
@given(st.floats(1.5, 10.0), st.floats(1e-4, 1e-2), st.floats(1.1, 1.67))
def test_adiabatic_energy_property(p_bar, vol, gamma):
    cfg = L.with_(chamber_pressure=p_bar * BAR, chamber_volume=vol, gas_gamma=gamma)
    exact = adiabatic_oracle(p_bar * BAR, vol, cfg.ambient_pressure, gamma)
    assert math.isclose(adiabatic_energy(cfg), exact, rel_tol=1e-6)


def test_ambient_chamber_stores_nothing():
    assert adiabatic_energy(L.with_(chamber_pressure=L.ambient_pressure)) == 0.0


def test_nonpositive_pressure_is_config_error():
    with pytest.raises(ConfigError):
        adiabatic_energy(L.with_(chamber_pressure=0.0))


def test_nominal_exit_kinematics():
    ex = simulate_tube_phase(L, V)
    assert abs(ex.exit_speed - 12.0) <= 0.5
    assert abs(ex.peak_acceleration_g - 21.0) <= 3.0
    assert np.allclose(ex.exit_velocity, [0, 0, ex.exit_speed], atol=1e-12)


def test_tube_phase_closed_form():
    moving = V.total_mass + L.carriage_mass
    from tubelaunch.launcher import mean_gauge_pressure
    force = L.efficiency * mean_gauge_pressure(L) * L.bore_area - moving * GRAVITY
    a = force / moving
    ex = simulate_tube_phase(L, V)
    assert math.isclose(ex.peak_acceleration, a, rel_tol=1e-12)
    assert math.isclose(ex.exit_speed, math.sqrt(2 * a * L.tube_length), rel_tol=1e-12)


def test_stroke_work_against_quadrature():
    v1, v2 = L.chamber_volume, L.chamber_volume + L.bore_area * L.tube_length
    val, _ = quad(lambda v: L.chamber_pressure * (v1 / v) ** L.gas_gamma, v1, v2, epsrel=1e-12)
    assert math.isclose(stroke_gas_work(L), val, rel_tol=1e-9)


def test_zero_efficiency_fails_launch():
    with pytest.raises(LaunchFailure):
        simulate_tube_phase(L.with_(efficiency=0.0), V)


def test_ambient_pressure_fails_launch():
    with pytest.raises(LaunchFailure):
        simulate_tube_phase(L.with_(chamber_pressure=L.ambient_pressure), V)


def test_kinematics_endpoints():
    ex = simulate_tube_phase(L, V)
    p0, v0 = tube_kinematics(L, ex, 0.0)
    p1, v1 = tube_kinematics(L, ex, ex.time_in_tube)
    assert np.allclose(v0, 0.0) and np.allclose(v1, ex.exit_velocity)
    assert np.allclose(p1, ex.exit_position)
    assert math.isclose(np.linalg.norm(p1 - p0), L.tube_length, rel_tol=1e-12)


def test_calibration_round_trip():
    eff = calibrate_efficiency(L, V, 12.0)
    assert math.isclose(eff, L.efficiency, rel_tol=1e-12)
    assert math.isclose(simulate_tube_phase(L.with_(efficiency=eff), V).exit_speed, 12.0, rel_tol=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.floats(4.0, 9.0), st.floats(4.0, 9.0))
def test_exit_speed_monotone_in_pressure(a, b):
    lo, hi = sorted((a, b))
    if hi - lo < 1e-6:
        return
    s_lo = simulate_tube_phase(L.with_(chamber_pressure=lo * BAR), V).exit_speed
    s_hi = simulate_tube_phase(L.with_(chamber_pressure=hi * BAR), V).exit_speed
    assert s_hi > s_lo


def test_energy_budget_numbers():
    w = adiabatic_energy(L)
    assert math.isclose(potential_energy(3.3, 32.0), 1036.0, rel_tol=0.01)
    assert potential_energy(3.3, 32.0) < w / 3.0


def test_apogee_bound_is_mass_free():
    ex = simulate_tube_phase(L, V)
    assert apogee_bound(ex) == apogee_bound(ex, 10.0) == pytest.approx(ex.exit_speed ** 2 / (2 * GRAVITY), rel=1e-12)
